#include "tdpot/instance_gen.hpp"

#include <algorithm>
#include <cmath>

namespace tdpot {

namespace {

constexpr std::uint64_t kStreamEdges = 1;
constexpr std::uint64_t kStreamProfiles = 2;
constexpr std::uint64_t kStreamLive = 3;
constexpr std::uint64_t kStreamDiagonal = 4;

std::uint64_t mix(std::uint64_t z) {
  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Weight travel_ms(double length_m, double kmh) {
  double ms = length_m / (kmh / 3.6) * 1000.0;
  return static_cast<Weight>(std::max(1.0, std::round(ms)));
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t id)
    : key_(mix(mix(mix(seed) ^ stream) ^ id)) {}

std::uint64_t CounterRng::next() { return mix(key_ ^ mix(counter_++)); }

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::int64_t CounterRng::range(std::int64_t lo, std::int64_t hi) {
  auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(next() % span);
}

Network gen_network(const GenConfig& cfg) {
  if (cfg.width < 1 || cfg.height < 1 || std::uint64_t{cfg.width} * cfg.height < 2)
    throw GenError("grid needs at least two vertices");
  if (std::uint64_t{cfg.width} * cfg.height >= kInvalidId) throw GenError("grid too large");
  const std::uint32_t w = cfg.width, h = cfg.height;
  auto id = [w](std::uint32_t r, std::uint32_t c) { return r * w + c; };

  struct Arc {
    Vertex from, to;
    double length;
    double kmh;
  };
  std::vector<Arc> arcs;
  auto local_pair = [&](Vertex a, Vertex b, double length_factor) {
    // Both directions share the length; speeds differ per direction.
    CounterRng rng(cfg.seed, kStreamEdges, (std::uint64_t{std::min(a, b)} << 32) | std::max(a, b));
    double length = cfg.spacing_m * length_factor * (1.0 + cfg.length_jitter * (2 * rng.uniform() - 1));
    double kmh_ab = cfg.local_kmh_min + (cfg.local_kmh_max - cfg.local_kmh_min) * rng.uniform();
    double kmh_ba = cfg.local_kmh_min + (cfg.local_kmh_max - cfg.local_kmh_min) * rng.uniform();
    arcs.push_back({a, b, length, kmh_ab});
    arcs.push_back({b, a, length, kmh_ba});
  };
  for (std::uint32_t r = 0; r < h; ++r)
    for (std::uint32_t c = 0; c < w; ++c) {
      if (c + 1 < w) local_pair(id(r, c), id(r, c + 1), 1.0);
      if (r + 1 < h) local_pair(id(r, c), id(r + 1, c), 1.0);
      if (cfg.diagonal_probability > 0 && r + 1 < h && c + 1 < w) {
        CounterRng rng(cfg.seed, kStreamDiagonal, id(r, c));
        if (rng.uniform() < cfg.diagonal_probability) {
          bool main = rng.uniform() < 0.5;
          if (main)
            local_pair(id(r, c), id(r + 1, c + 1), std::sqrt(2.0));
          else
            local_pair(id(r, c + 1), id(r + 1, c), std::sqrt(2.0));
        }
      }
    }
  const std::uint32_t span = cfg.highway_span;
  if (cfg.highway_every > 0 && span >= 2) {
    auto highway = [&](Vertex a, Vertex b) {
      double length = cfg.spacing_m * span;
      arcs.push_back({a, b, length, cfg.highway_kmh});
      arcs.push_back({b, a, length, cfg.highway_kmh});
    };
    for (std::uint32_t r = cfg.highway_every / 2; r < h; r += cfg.highway_every)
      for (std::uint32_t c = 0; c + span < w; c += span) highway(id(r, c), id(r, c + span));
    for (std::uint32_t c = cfg.highway_every / 2; c < w; c += cfg.highway_every)
      for (std::uint32_t r = 0; r + span < h; r += span) highway(id(r, c), id(r + span, c));
  }

  std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) {
    return std::pair(x.from, x.to) < std::pair(y.from, y.to);
  });
  // Highway and diagonal lines never coincide with grid arcs, but keep the
  // faster arc if they ever do.
  std::vector<std::pair<Vertex, Vertex>> pairs;
  std::vector<Weight> weights;
  for (const Arc& a : arcs) {
    Weight t = travel_ms(a.length, a.kmh);
    if (!pairs.empty() && pairs.back() == std::pair(a.from, a.to)) {
      weights.back() = std::min(weights.back(), t);
      continue;
    }
    pairs.emplace_back(a.from, a.to);
    weights.push_back(t);
  }
  Network net{Graph::from_arcs(w * h, pairs), std::move(weights)};
  return net;
}

namespace {

// Rush-hour profile: free flow outside the peaks, trapezoids with noisy
// plateaus at the peaks. All ramps are much longer than the added delay, so
// slopes stay far above -1.
void append_profile(const GenConfig& cfg, Weight free_flow, CounterRng& rng, std::vector<std::uint32_t>& dep,
                    std::vector<std::uint32_t>& travel) {
  constexpr std::int64_t kMinute = 60'000;
  struct Point {
    std::int64_t t;
    double factor;
  };
  std::vector<Point> points{{0, 1.0}};
  const std::uint32_t budget = std::max<std::uint32_t>(cfg.max_breakpoints, 9);
  const std::uint32_t noise_per_peak = std::min<std::uint32_t>((budget - 9) / 2, 4 + rng.range(0, 6));
  for (double peak_h : {cfg.morning_peak_h, cfg.evening_peak_h}) {
    double factor = cfg.peak_factor_min + (cfg.peak_factor_max - cfg.peak_factor_min) * rng.uniform();
    std::int64_t center = static_cast<std::int64_t>(peak_h * 60) * kMinute + rng.range(-30, 30) * kMinute;
    std::int64_t ramp = rng.range(45, 90) * kMinute;
    std::int64_t half_plateau = rng.range(20, 60) * kMinute;
    std::int64_t start = center - half_plateau - ramp;
    points.push_back({start, 1.0});
    points.push_back({center - half_plateau, factor});
    std::int64_t step = 2 * half_plateau / (noise_per_peak + 1);
    for (std::uint32_t i = 1; i <= noise_per_peak; ++i)
      points.push_back({center - half_plateau + i * step, factor * (0.9 + 0.2 * rng.uniform())});
    points.push_back({center + half_plateau, factor});
    points.push_back({center + half_plateau + ramp, 1.0});
  }
  std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) { return a.t < b.t; });
  const std::size_t first = dep.size();
  for (const Point& p : points) {
    if (p.t < 0 || p.t >= kPeriod) continue;
    if (dep.size() > first && p.t <= std::int64_t{dep.back()}) continue;
    dep.push_back(static_cast<std::uint32_t>(p.t));
    travel.push_back(static_cast<std::uint32_t>(std::max(1.0, std::round(free_flow * std::max(1.0, p.factor)))));
  }
}

}  // namespace

TravelTimeFunctions gen_predictions(const GenConfig& cfg, const Network& net) {
  const EdgeId m = net.graph.num_edges();
  std::vector<std::uint32_t> first{0}, dep, travel;
  first.reserve(m + 1);
  for (EdgeId e = 0; e < m; ++e) {
    CounterRng rng(cfg.seed, kStreamProfiles, e);
    if (rng.uniform() < cfg.td_fraction) {
      append_profile(cfg, net.free_flow[e], rng, dep, travel);
    } else {
      dep.push_back(0);
      travel.push_back(net.free_flow[e]);
    }
    first.push_back(static_cast<std::uint32_t>(dep.size()));
  }
  TravelTimeFunctions f(std::move(first), std::move(dep), std::move(travel));
  f.validate();
  return f;
}

LiveSnapshot gen_live(const GenConfig& cfg, const Graph& g, const TravelTimeFunctions& p) {
  LiveSnapshot snap;
  snap.tau_now = cfg.tau_now;
  const EdgeId m = g.num_edges();
  const std::uint32_t count = std::min<std::uint32_t>(cfg.incidents, m);
  // Partial Fisher-Yates over edge IDs; swaps are recorded sparsely.
  std::vector<EdgeId> perm(m);
  for (EdgeId e = 0; e < m; ++e) perm[e] = e;
  for (std::uint32_t i = 0; i < count; ++i) {
    CounterRng pick(cfg.seed, kStreamLive, i);
    auto j = static_cast<EdgeId>(pick.range(i, m - 1));
    std::swap(perm[i], perm[j]);
    EdgeId e = perm[i];
    CounterRng rng(cfg.seed, kStreamLive, (std::uint64_t{1} << 40) | e);
    LiveEntry entry{e, kInfinity, cfg.tau_now + cfg.horizon};
    if (rng.uniform() >= cfg.blocked_fraction) {
      Duration now_value = p.evaluate(e, cfg.tau_now);
      entry.live = static_cast<Duration>(std::ceil(now_value * (1.5 + 2.5 * rng.uniform()))) + 1;
    }
    snap.entries.push_back(entry);
  }
  std::sort(snap.entries.begin(), snap.entries.end(), [](const LiveEntry& a, const LiveEntry& b) { return a.edge < b.edge; });
  return snap;
}

}  // namespace tdpot
