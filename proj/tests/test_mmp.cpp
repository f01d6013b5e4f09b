#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tdpot/lazy_rphast.hpp"
#include "tdpot/mmp.hpp"
#include "tdpot/search.hpp"

using namespace tdpot;

namespace {

constexpr Timestamp kHour = 3'600'000;

Metric metric_of(const MetricSet& set, std::uint32_t i) {
  Metric m;
  auto up = set.up_of(i);
  auto down = set.down_of(i);
  m.up.assign(up.begin(), up.end());
  m.down.assign(down.begin(), down.end());
  return m;
}

// Remaining c-distance from v departing at t, by plain Dijkstra.
Duration remaining(const fixture::Instance& in, Vertex v, Vertex t, Timestamp at) {
  auto arr = oracle::arrivals(
      in.net.graph, [&](EdgeId e, Timestamp x) { return combined_eval(e, x, in.p, *in.overlay); }, v, at);
  return arr[t] >= oracle::kInf ? kInfinity : arr[t] - at;
}

}  // namespace

TEST_CASE("interval grid") {
  IntervalGridConfig cfg;
  auto iv = build_intervals(cfg);
  REQUIRE(iv.size() == 103);
  CHECK(iv[0].full_day);
  std::map<Duration, int> by_length;
  for (std::size_t i = 1; i < iv.size(); ++i) {
    CHECK_FALSE(iv[i].full_day);
    CHECK(iv[i].begin >= 6 * kHour);
    CHECK(iv[i].end <= 22 * kHour);
    ++by_length[iv[i].length()];
  }
  CHECK(by_length[kHour] == 31);
  CHECK(by_length[2 * kHour] == 29);
  CHECK(by_length[4 * kHour] == 25);
  CHECK(by_length[8 * kHour] == 17);

  auto dir = std::filesystem::temp_directory_path() / "tdpot_interval_cfg";
  std::filesystem::create_directories(dir);
  IntervalGridConfig custom;
  custom.lengths_min = {90, 180};
  custom.step_min = 45;
  custom.live_window = 30 * 60'000;
  write_interval_config(dir / "grid.cfg", custom);
  auto back = read_interval_config(dir / "grid.cfg");
  CHECK(back.lengths_min == custom.lengths_min);
  CHECK(back.step_min == 45);
  CHECK(back.day_begin_min == custom.day_begin_min);
  CHECK(back.live_window == custom.live_window);
  {
    std::ofstream bad(dir / "bad.cfg");
    bad << "step_min = ten\n";
  }
  CHECK_THROWS(read_interval_config(dir / "bad.cfg"));
  {
    std::ofstream bad(dir / "bad.cfg");
    bad << "# comment\ncolour = blue\n";
  }
  CHECK_THROWS(read_interval_config(dir / "bad.cfg"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("interval metrics: customize_many, dominance, constant functions") {
  auto in = fixture::make(12, 2000, 0);
  auto prep = mmp_preprocess(in.topo, in.p, IntervalGridConfig{});
  REQUIRE(prep.metrics.count == 103);
  auto bounds = interval_lower_bounds(in.p, prep.intervals);
  // Each block-customized metric equals an individual basic customization.
  for (std::uint32_t i : {0u, 1u, 17u, 50u, 102u}) {
    auto single = basic_customize(in.topo, bounds[i]);
    auto mine = metric_of(prep.metrics, i);
    CHECK(mine.up == single.up);
    CHECK(mine.down == single.down);
  }
  // Interval metrics are at least the full-day metric on every augmented edge.
  std::size_t below = 0;
  for (std::uint32_t i = 1; i < prep.metrics.count; ++i)
    for (EdgeId e = 0; e < in.topo.num_edges(); ++e)
      below += prep.metrics.up_at(e, i) < prep.metrics.up_at(e, 0) || prep.metrics.down_at(e, i) < prep.metrics.down_at(e, 0);
  CHECK(below == 0);

  auto constant = TravelTimeFunctions::constant(in.net.free_flow);
  auto flat = mmp_preprocess(in.topo, constant, IntervalGridConfig{});
  for (std::uint32_t i = 1; i < flat.metrics.count; ++i) {
    CHECK(std::equal(flat.metrics.up_of(i).begin(), flat.metrics.up_of(i).end(), flat.metrics.up_of(0).begin()));
    CHECK(std::equal(flat.metrics.down_of(i).begin(), flat.metrics.down_of(i).end(), flat.metrics.down_of(0).begin()));
  }

  auto dir = std::filesystem::temp_directory_path() / "tdpot_mmp_io";
  save_mmp(dir, prep);
  auto loaded = load_mmp(dir);
  CHECK(loaded.metrics.up == prep.metrics.up);
  CHECK(loaded.metrics.down == prep.metrics.down);
  CHECK(loaded.slot_metric == prep.slot_metric);
  CHECK(loaded.intervals.size() == prep.intervals.size());
  CHECK(loaded.intervals[5].begin == prep.intervals[5].begin);
  std::filesystem::remove_all(dir);
}

TEST_CASE("MMP update: live metric, idempotence, reduced topology") {
  auto in = fixture::make(12, 2000, 40);
  auto prep = mmp_preprocess(in.topo, in.p, IntervalGridConfig{});

  auto empty = LiveOverlay::empty(in.p, in.overlay->tau_now());
  auto plain = mmp_update(in.topo, prep, in.p, empty);
  std::vector<Weight> live_lb(in.p.num_edges());
  for (EdgeId e = 0; e < in.p.num_edges(); ++e)
    live_lb[e] = to_weight(in.p.min_over(e, empty.tau_now(), empty.tau_now() + prep.live_window));
  auto expected = basic_customize(in.topo, live_lb);
  CHECK(plain.live.up == expected.up);
  CHECK(plain.live.down == expected.down);

  auto a = mmp_update(in.topo, prep, in.p, *in.overlay);
  auto b = mmp_update(in.topo, prep, in.p, *in.overlay);
  CHECK(a.live.up == b.live.up);
  CHECK(a.upper_perfect.weights.up == b.upper_perfect.weights.up);
  CHECK(a.up_alive == b.up_alive);
  CHECK(a.down_alive == b.down_alive);
  CHECK(a.removed_arcs > 0);

  // Lower-bound distances on the reduced topology match the full one.
  auto full = SearchTopology::full(in.topo);
  const Vertex n = in.net.graph.num_vertices();
  for (std::uint32_t slot : {0u, 9u, 40u, 80u}) {
    auto m = metric_of(prep.metrics, slot);
    LazyRphast on_full(in.topo, full), on_reduced(in.topo, a.lower_search);
    for (Vertex t = 0; t < n; t += 13) {
      on_full.init(m, t);
      on_reduced.init(m, t);
      for (Vertex v = 0; v < n; v += 3) CHECK(on_full.distance(v) == on_reduced.distance(v));
    }
  }
  LazyRphast live_full(in.topo, full), live_reduced(in.topo, a.lower_search);
  for (Vertex t = 0; t < n; t += 11) {
    live_full.init(a.live, t);
    live_reduced.init(a.live, t);
    for (Vertex v = 0; v < n; v += 3) CHECK(live_full.distance(v) == live_reduced.distance(v));
  }
}

TEST_CASE("MMP with constant functions equals CCH potentials") {
  auto in = fixture::make(10, 450, 0);
  auto constant = TravelTimeFunctions::constant(in.net.free_flow);
  auto prep = mmp_preprocess(in.topo, constant, IntervalGridConfig{});
  auto overlay = LiveOverlay::empty(constant, 8 * kHour);
  auto upd = mmp_update(in.topo, prep, constant, overlay);
  auto metric = basic_customize(in.topo, in.net.free_flow);
  auto full = SearchTopology::full(in.topo);
  CchPotential cch(in.topo, full, metric);
  MmpPotential mmp(in.topo, prep, upd);
  const Vertex n = in.net.graph.num_vertices();
  for (Vertex t = 0; t < n; t += 9) {
    const Timestamp dep = 8 * kHour + t * 1000;
    cch.init(0, t, dep);
    mmp.init(0, t, dep);
    for (Vertex v = 0; v < n; ++v) CHECK(mmp.estimate(v, dep + v * 5000) == cch.estimate(v, dep));
  }
}

TEST_CASE("MMP interval selection") {
  // Path 0-1-2-3 with constant weights; upper bound = exact distance.
  Graph g = Graph::from_arcs(4, {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}});
  auto topo = CchTopology::contract(g, compute_order(g));
  for (Duration leg : {Duration{10 * 60'000}, Duration{3 * kHour}}) {
    auto p = TravelTimeFunctions::constant(std::vector<Weight>(6, static_cast<Weight>(leg)));
    auto prep = mmp_preprocess(topo, p, IntervalGridConfig{});
    auto overlay = LiveOverlay::empty(p, 8 * kHour);
    auto upd = mmp_update(topo, prep, p, overlay);
    MmpPotential pot(topo, prep, upd);

    // Departure at tau_now: [8:00, 8:30] fits into the live window.
    pot.init(0, 3, 8 * kHour);
    CHECK(pot.tau_max() == 8 * kHour + 3 * leg);
    if (leg < kHour) {
      CHECK(pot.selected_slot() == pot.live_slot());
      // Later in the morning: the 1 h interval with the latest start that
      // still contains [9:10, 9:40] is [9:00, 10:00].
      pot.init(0, 3, 9 * kHour + 10 * 60'000);
      const auto& iv = prep.intervals[pot.selected_slot()];
      CHECK(iv.begin == 9 * kHour);
      CHECK(iv.end == 10 * kHour);
      // Next day, same time of day: same interval.
      pot.init(0, 3, kPeriod + 9 * kHour + 10 * 60'000);
      CHECK(prep.intervals[pot.selected_slot()].begin == 9 * kHour);
      // At night only the full day applies.
      pot.init(0, 3, 23 * kHour);
      CHECK(pot.selected_slot() == 0);
    } else {
      // Nine hours do not fit into any interval.
      CHECK(pot.selected_slot() == 0);
    }
  }
  // Unreachable target: full day.
  Graph split = Graph::from_arcs(3, {{0, 1}, {1, 0}});
  auto stopo = CchTopology::contract(split, compute_order(split));
  auto sp = TravelTimeFunctions::constant(std::vector<Weight>(2, 1000));
  auto sprep = mmp_preprocess(stopo, sp, IntervalGridConfig{});
  auto soverlay = LiveOverlay::empty(sp, 8 * kHour);
  auto supd = mmp_update(stopo, sprep, sp, soverlay);
  MmpPotential spot(stopo, sprep, supd);
  spot.init(0, 2, 8 * kHour);
  CHECK(spot.tau_max() == kInfinity);
  CHECK(spot.selected_slot() == 0);
  CHECK(spot.estimate(0, 8 * kHour) == kInfinity);
}

TEST_CASE("A* with MMP is exact; estimates are lower bounds") {
  auto in = fixture::make(16, 3000, 60);
  auto prep = mmp_preprocess(in.topo, in.p, IntervalGridConfig{});
  auto upd = mmp_update(in.topo, prep, in.p, *in.overlay);
  CombinedWeights w(in.p, in.overlay);
  TdAstar astar(in.net.graph);
  TdDijkstra dijkstra(in.net.graph);
  const Vertex n = in.net.graph.num_vertices();
  CounterRng rng(9, 0, 0);
  std::size_t selected_interval = 0, lower_checks = 0;
  for (bool switching : {true, false}) {
    MmpPotential pot(in.topo, prep, upd, {switching});
    for (int q = 0; q < 40; ++q) {
      Vertex s = static_cast<Vertex>(rng.range(0, n - 1)), t = static_cast<Vertex>(rng.range(0, n - 1));
      Timestamp dep = in.overlay->tau_now() + rng.range(0, 2 * kHour);
      auto ref = dijkstra.run(w, s, t, dep);
      auto res = astar.run(w, pot, s, t, dep, {.record_settled = true});
      CHECK(res.distance == ref.distance);
      if (pot.selected_slot() != 0) ++selected_interval;
      if (ref.distance >= kInfinity) continue;
      CHECK(pot.tau_max() >= dep + ref.distance);
      // Lower bound at the true arrival time of sampled settled vertices.
      auto settled = astar.settled();
      for (std::size_t i = 0; i < settled.size(); i += 1 + settled.size() / 8) {
        Vertex v = settled[i];
        Timestamp at = dijkstra.run(w, s, v, dep).distance + dep;
        Duration rest = remaining(in, v, t, at);
        CHECK(pot.estimate(v, at) <= rest);
        ++lower_checks;
      }
    }
  }
  CHECK(selected_interval > 0);
  CHECK(lower_checks > 100);
}

TEST_CASE("MMP without switching is feasible; estimates only jump upward") {
  auto in = fixture::make(14, 3000, 40);
  auto prep = mmp_preprocess(in.topo, in.p, IntervalGridConfig{});
  auto upd = mmp_update(in.topo, prep, in.p, *in.overlay);
  CombinedWeights w(in.p, in.overlay);
  MmpPotential fixed(in.topo, prep, upd, {false});
  MmpPotential switching(in.topo, prep, upd, {true});
  const Vertex n = in.net.graph.num_vertices();
  CounterRng rng(4, 0, 0);
  std::vector<std::pair<EdgeId, Timestamp>> samples;
  std::size_t jumps = 0;
  for (int q = 0; q < 20; ++q) {
    Vertex s = static_cast<Vertex>(rng.range(0, n - 1)), t = static_cast<Vertex>(rng.range(0, n - 1));
    Timestamp dep = in.overlay->tau_now() + rng.range(0, kHour);
    fixed.init(s, t, dep);
    if (fixed.tau_max() >= kInfinity) continue;
    // The selected metric bounds c only within [dep, tau_max].
    samples.clear();
    for (EdgeId e = 0; e < in.net.graph.num_edges(); e += 3)
      samples.emplace_back(e, rng.range(dep, fixed.tau_max()));
    CHECK(check_feasibility(in.net.graph, w, fixed, std::span<const std::pair<EdgeId, Timestamp>>(samples)).empty());

    // A fresh query state per evaluation shows the estimate as a function of
    // time; within one query memoized values are kept while still valid.
    for (Vertex v = 0; v < n; v += 5) {
      switching.init(s, t, dep);
      Duration prev = switching.estimate(v, dep);
      const Timestamp step = std::max<Duration>(1, (fixed.tau_max() - dep) / 12);
      for (Timestamp at = dep + step; at <= fixed.tau_max() + step; at += step) {
        switching.init(s, t, dep);
        Duration h = switching.estimate(v, at);
        CHECK(h >= prev);
        jumps += h > prev;
        prev = h;
      }
    }
  }
  CHECK(jumps > 0);
}
