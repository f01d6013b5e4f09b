#include "tdpot/traffic.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace tdpot {

LiveOverlay::LiveOverlay(const TravelTimeFunctions& predicted, Timestamp tau_now, std::vector<LiveEntry> entries,
                         OverlayLoadStats* stats)
    : tau_now_(tau_now),
      live_(predicted.num_edges(), 0),
      end_(predicted.num_edges(), tau_now),
      predicted_at_end_(predicted.num_edges(), 0) {
  OverlayLoadStats local;
  for (const auto& entry : entries) {
    if (entry.edge >= predicted.num_edges() || entry.end < tau_now || end_[entry.edge] != tau_now) {
      ++local.dropped_invalid;
      continue;
    }
    if (entry.live <= predicted.evaluate(entry.edge, tau_now)) {
      ++local.dropped_not_slower;
      continue;
    }
    if (entry.end == tau_now) {
      // Expires immediately; equivalent to no entry.
      ++local.accepted;
      continue;
    }
    live_[entry.edge] = entry.live;
    end_[entry.edge] = entry.end;
    predicted_at_end_[entry.edge] = predicted.evaluate(entry.edge, entry.end);
    entries_.push_back(entry);
    ++local.accepted;
  }
  if (stats) *stats = local;
}

Duration combined_min_over(EdgeId e, Timestamp a, Timestamp b, const TravelTimeFunctions& p, const LiveOverlay& o) {
  const Timestamp end = o.end(e);
  Duration best = kInfinity;
  if (b >= end) best = p.min_over(e, std::max(a, end), b);
  if (a >= end) return best;

  // On [a, min(b, end-1)] c = max(p, g) with g(t) = min(live, A - t). Both are
  // piecewise linear, so the minimum is at an interval end, a breakpoint of
  // either function, or a crossing of p with the line A - t.
  const Timestamp hi = std::min(b, end - 1);
  const Duration A = o.predicted_at_end(e) + end;
  std::vector<Timestamp> candidates{a, hi};
  if (o.live(e) < kInfinity) {
    Timestamp knee = A - o.live(e);
    for (Timestamp d = -1; d <= 1; ++d) candidates.push_back(knee + d);
  }
  TtfView f = p.function(e);
  if (!f.is_constant()) {
    const Timestamp day_start = a - time_of_day(a);
    for (Timestamp day = day_start - kPeriod; day <= hi; day += kPeriod) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        std::size_t j = (i + 1) % f.size();
        Timestamp t1 = day + f.departure[i];
        Timestamp t2 = j == 0 ? day + kPeriod + f.departure[0] : day + f.departure[j];
        candidates.push_back(t1);
        double slope = (double(f.travel[j]) - double(f.travel[i])) / double(t2 - t1);
        if (slope <= -1.0) continue;
        double cross = (double(A) - double(f.travel[i]) + slope * double(t1)) / (1.0 + slope);
        if (cross < double(t1) - 2 || cross > double(t2) + 2) continue;
        Timestamp c = static_cast<Timestamp>(std::floor(cross));
        for (Timestamp d = -1; d <= 2; ++d) candidates.push_back(c + d);
      }
      // The wrap segment before the first breakpoint of this day.
      candidates.push_back(day + kPeriod + f.departure[0]);
    }
  }
  for (Timestamp t : candidates)
    if (t >= a && t <= hi) best = std::min(best, combined_eval(e, t, p, o));
  return best;
}

TrafficBounds extract_bounds(const TravelTimeFunctions& p, const LiveOverlay& o, Duration window) {
  const EdgeId m = p.num_edges();
  TrafficBounds bounds{std::vector<Weight>(m), std::vector<Weight>(m)};
  const Timestamp now = o.tau_now();
  for (EdgeId e = 0; e < m; ++e) {
    Duration upper = global_max(p.function(e));
    if (o.has_entry(e)) {
      if (o.live(e) >= kInfinity) {
        upper = kInfinity;
      } else {
        // c is largest right at tau_now on the live part.
        upper = std::max(upper, std::min(o.live(e), o.predicted_at_end(e) + o.end(e) - now));
      }
      bounds.live_lower[e] = to_weight(combined_min_over(e, now, now + window, p, o));
    } else {
      bounds.live_lower[e] = to_weight(p.min_over(e, now, now + window));
    }
    bounds.upper[e] = to_weight(upper);
  }
  return bounds;
}

LiveSnapshot read_snapshot(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open snapshot " + file.string());
  LiveSnapshot snap;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty snapshot " + file.string());
  snap.tau_now = std::stoll(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string edge, live, end;
    if (!(fields >> edge >> live >> end))
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    LiveEntry entry;
    entry.edge = static_cast<EdgeId>(std::stoul(edge));
    entry.live = live == "INF" ? kInfinity : std::stoll(live);
    entry.end = std::stoll(end);
    snap.entries.push_back(entry);
  }
  return snap;
}

void write_snapshot(const std::filesystem::path& file, const LiveSnapshot& snapshot) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write snapshot " + file.string());
  out << snapshot.tau_now << '\n';
  for (const auto& entry : snapshot.entries) {
    out << entry.edge << ' ';
    if (entry.live >= kInfinity)
      out << "INF";
    else
      out << entry.live;
    out << ' ' << entry.end << '\n';
  }
}

std::vector<LiveEntry> resolve_vertex_pairs(const Graph& g, const std::vector<VertexPairEntry>& pairs,
                                            std::size_t* unresolved) {
  std::vector<LiveEntry> out;
  std::size_t missing = 0;
  for (const auto& pair : pairs) {
    EdgeId e = pair.from < g.num_vertices() ? g.find_edge(pair.from, pair.to) : kInvalidId;
    if (e == kInvalidId) {
      ++missing;
      continue;
    }
    out.push_back({e, pair.live, pair.end});
  }
  if (unresolved) *unresolved = missing;
  return out;
}

}  // namespace tdpot
