#include <filesystem>
#include <memory>

#include "doctest.h"
#include "oracles.hpp"
#include "tdpot/traffic.hpp"

using namespace tdpot;

namespace {

constexpr Timestamp kNow = 8 * 3'600'000;

Duration sampled_combined_min(EdgeId e, Timestamp a, Timestamp b, const TravelTimeFunctions& p, const LiveOverlay& o) {
  Duration best = kInfinity;
  for (Timestamp t = a; t <= b; t += 1000) best = std::min(best, combined_eval(e, t, p, o));
  return std::min(best, combined_eval(e, b, p, o));
}

}  // namespace

TEST_CASE("combined_eval examples") {
  auto p = TravelTimeFunctions::constant(std::vector<Weight>{10'000});
  LiveOverlay o(p, kNow, {{0, 50'000, kNow + 60'000}});
  CHECK(combined_eval(0, kNow, p, o) == 50'000);
  CHECK(combined_eval(0, kNow + 60'000, p, o) == 10'000);
  // Switch-back segment: p(end) + end - t once that is below the live value.
  CHECK(combined_eval(0, kNow + 30'000, p, o) == 40'000);

  LiveOverlay blocked(p, kNow, {{0, kInfinity, kNow + 60'000}});
  CHECK(combined_eval(0, kNow, p, blocked) == 70'000);
  CHECK(combined_eval(0, kNow + 59'000, p, blocked) == 11'000);
  CHECK(combined_eval(0, kNow + 60'000, p, blocked) == 10'000);
}

TEST_CASE("overlay load drops entries that are not slower than the prediction") {
  auto p = TravelTimeFunctions::constant(std::vector<Weight>{10'000, 10'000, 10'000});
  OverlayLoadStats stats;
  LiveOverlay o(p, kNow,
                {{0, 5'000, kNow + 1000}, {1, 20'000, kNow + 1000}, {1, 30'000, kNow + 1000}, {7, 1, kNow + 1},
                 {2, 20'000, kNow - 5}},
                &stats);
  CHECK(stats.accepted == 1);
  CHECK(stats.dropped_not_slower == 1);
  CHECK(stats.dropped_invalid == 3);
  CHECK(!o.has_entry(0));
  CHECK(o.has_entry(1));
  CHECK(o.end(0) == kNow);
}

TEST_CASE("extract_bounds") {
  auto p = TravelTimeFunctions::constant(std::vector<Weight>{10'000, 10'000, 7'000});
  LiveOverlay o(p, kNow, {{0, 50'000, kNow + 60'000}, {1, kInfinity, kNow + 60'000}});
  auto b = extract_bounds(p, o);
  CHECK(b.upper[0] == 50'000);
  CHECK(b.upper[1] == kInfWeight);
  CHECK(b.upper[2] == 7'000);
  CHECK(b.live_lower[2] == 7'000);
  CHECK(Duration{b.live_lower[0]} == sampled_combined_min(0, kNow, kNow + kLiveWindow, p, o));
  CHECK(b.live_lower[0] == 10'000);

  // Time-dependent predictions with live entries: exact minimum vs 1 s sampling.
  Graph g = oracle::random_graph(40, 40, 9);
  auto f = oracle::random_ttfs(g.num_edges(), 9, 1.0);
  std::vector<LiveEntry> entries;
  std::mt19937_64 rng(4);
  for (EdgeId e = 0; e < g.num_edges(); e += 3) {
    Duration now_value = f.evaluate(e, kNow);
    Duration live = (e % 9 == 0) ? kInfinity : now_value + 1 + static_cast<Duration>(rng() % 900'000);
    entries.push_back({e, live, kNow + 1 + static_cast<Timestamp>(rng() % 7'200'000)});
  }
  LiveOverlay td(f, kNow, entries);
  auto tb = extract_bounds(f, td);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    Duration sampled = sampled_combined_min(e, kNow, kNow + kLiveWindow, f, td);
    CHECK(Duration{tb.live_lower[e]} <= sampled);
    // Sampling at 1 s can miss the exact minimum by at most the sampling step.
    CHECK(Duration{tb.live_lower[e]} + 1000 >= sampled);
    if (td.has_entry(e) && td.live(e) >= kInfinity) {
      CHECK(tb.upper[e] == kInfWeight);
    } else {
      for (Timestamp t = kNow; t < kNow + kPeriod; t += 60'000) CHECK(combined_eval(e, t, f, td) <= Duration{tb.upper[e]});
    }
  }
}

TEST_CASE("combined function properties: p <= c and FIFO") {
  Graph g = oracle::random_graph(50, 60, 21);
  auto f = oracle::random_ttfs(g.num_edges(), 21, 0.6);
  std::vector<LiveEntry> entries;
  for (EdgeId e = 0; e < g.num_edges(); e += 2)
    entries.push_back({e, e % 10 == 0 ? kInfinity : f.evaluate(e, kNow) + 300'000, kNow + 3'600'000});
  LiveOverlay o(f, kNow, entries);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    Timestamp prev_arrival = 0;
    for (Timestamp t = kNow; t < kNow + 3 * 3'600'000; t += 5000) {
      Duration c = combined_eval(e, t, f, o);
      CHECK(f.evaluate(e, t) <= c);
      CHECK(prev_arrival <= t + c);
      prev_arrival = t + c;
    }
    if (o.has_entry(e))
      for (Timestamp t = o.end(e); t < kNow + kPeriod; t += 600'000) CHECK(combined_eval(e, t, f, o) == f.evaluate(e, t));
  }
}

TEST_CASE("snapshot round trip and vertex-pair resolution") {
  auto file = std::filesystem::temp_directory_path() / "tdpot_snapshot.txt";
  LiveSnapshot snap{kNow, {{3, 1234, kNow + 10}, {5, kInfinity, kNow + 20}}};
  write_snapshot(file, snap);
  auto back = read_snapshot(file);
  CHECK(back.tau_now == kNow);
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[1].live == kInfinity);
  CHECK(back.entries[0].edge == 3);
  std::filesystem::remove(file);

  Graph g = Graph::from_arcs(3, {{0, 1}, {1, 2}});
  std::size_t missing = 0;
  auto resolved = resolve_vertex_pairs(g, {{1, 2, 100, kNow + 5}, {2, 0, 100, kNow + 5}, {9, 1, 1, 1}}, &missing);
  CHECK(missing == 2);
  REQUIRE(resolved.size() == 1);
  CHECK(resolved[0].edge == 1);
}

TEST_CASE("overlay handle swaps atomically") {
  auto p = TravelTimeFunctions::constant(std::vector<Weight>{10});
  auto first = std::make_shared<const LiveOverlay>(p, 0, std::vector<LiveEntry>{});
  OverlayHandle handle(first);
  auto in_flight = handle.get();
  handle.replace(std::make_shared<const LiveOverlay>(p, 5, std::vector<LiveEntry>{}));
  CHECK(in_flight->tau_now() == 0);
  CHECK(handle.get()->tau_now() == 5);
}
