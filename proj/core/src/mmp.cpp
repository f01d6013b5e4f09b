#include "tdpot/mmp.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tdpot/compression.hpp"
#include "tdpot/vector_io.hpp"

namespace tdpot {
namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_number(const std::string& text, const std::string& key) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw std::runtime_error("interval config: bad value for " + key + ": '" + text + "'");
  return v;
}

// dst = min(dst, a + b) per lane, saturating at kInfWeight. Written so that
// the compiler can vectorize it.
inline void relax_lanes(Weight* __restrict dst, const Weight* __restrict a, const Weight* __restrict b,
                        std::uint32_t lanes) {
  for (std::uint32_t i = 0; i < lanes; ++i) {
    Weight s = a[i] + b[i];
    s = s < a[i] ? kInfWeight : s;
    dst[i] = s < dst[i] ? s : dst[i];
  }
}

}  // namespace

IntervalGridConfig read_interval_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  IntervalGridConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("interval config: expected key = value: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "lengths_min") {
      cfg.lengths_min.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ','))
        cfg.lengths_min.push_back(static_cast<std::uint32_t>(parse_number(trim(item), key)));
    } else if (key == "step_min") {
      cfg.step_min = static_cast<std::uint32_t>(parse_number(value, key));
    } else if (key == "day_begin_min") {
      cfg.day_begin_min = static_cast<std::uint32_t>(parse_number(value, key));
    } else if (key == "day_end_min") {
      cfg.day_end_min = static_cast<std::uint32_t>(parse_number(value, key));
    } else if (key == "live_window_ms") {
      cfg.live_window = static_cast<Duration>(parse_number(value, key));
    } else {
      throw std::runtime_error("interval config: unknown key " + key);
    }
  }
  if (cfg.step_min == 0) throw std::runtime_error("interval config: step_min must be positive");
  if (cfg.day_begin_min > cfg.day_end_min || cfg.day_end_min > 24 * 60)
    throw std::runtime_error("interval config: day window must satisfy begin <= end <= 1440");
  return cfg;
}

void write_interval_config(const std::filesystem::path& file, const IntervalGridConfig& cfg) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  out << "lengths_min = ";
  for (std::size_t i = 0; i < cfg.lengths_min.size(); ++i) out << (i ? "," : "") << cfg.lengths_min[i];
  out << "\nstep_min = " << cfg.step_min << "\nday_begin_min = " << cfg.day_begin_min
      << "\nday_end_min = " << cfg.day_end_min << "\nlive_window_ms = " << cfg.live_window << '\n';
}

std::vector<DayInterval> build_intervals(const IntervalGridConfig& cfg) {
  constexpr Timestamp kMinute = 60'000;
  std::vector<DayInterval> out{{0, kPeriod, true}};
  for (std::uint32_t len : cfg.lengths_min) {
    if (len == 0) continue;
    for (std::uint32_t start = cfg.day_begin_min; start + len <= cfg.day_end_min; start += cfg.step_min)
      out.push_back({start * kMinute, (start + len) * kMinute, false});
  }
  return out;
}

std::vector<std::vector<Weight>> interval_lower_bounds(const TravelTimeFunctions& p,
                                                       const std::vector<DayInterval>& intervals) {
  std::vector<std::vector<Weight>> out;
  out.reserve(intervals.size());
  const std::vector<Weight> global = p.lower_bounds();
  for (const DayInterval& iv : intervals) {
    if (iv.full_day) {
      out.push_back(global);
      continue;
    }
    std::vector<Weight> w(p.num_edges());
    for (EdgeId e = 0; e < p.num_edges(); ++e) w[e] = to_weight(p.min_over(e, iv.begin, iv.end));
    out.push_back(std::move(w));
  }
  return out;
}

MetricSet customize_many(const CchTopology& topo, const std::vector<std::vector<Weight>>& inputs,
                         std::uint32_t block) {
  MetricSet m;
  m.count = static_cast<std::uint32_t>(inputs.size());
  m.edges = topo.num_edges();
  const std::size_t edges = m.edges;
  m.up.resize(edges * m.count);
  m.down.resize(edges * m.count);
  block = std::max<std::uint32_t>(block, 1);
  std::vector<Weight> up, down;
  for (std::uint32_t first = 0; first < m.count; first += block) {
    const std::uint32_t lanes = std::min(block, m.count - first);
    up.assign(edges * lanes, kInfWeight);
    down.assign(edges * lanes, kInfWeight);
    for (std::size_t e = 0; e < edges; ++e) {
      if (EdgeId in = topo.input_up(static_cast<EdgeId>(e)); in != kInvalidId)
        for (std::uint32_t i = 0; i < lanes; ++i) up[e * lanes + i] = inputs[first + i][in];
      if (EdgeId in = topo.input_down(static_cast<EdgeId>(e)); in != kInvalidId)
        for (std::uint32_t i = 0; i < lanes; ++i) down[e * lanes + i] = inputs[first + i][in];
    }
    Weight* u = up.data();
    Weight* d = down.data();
    topo.for_each_lower_triangle([&](EdgeId e_xu, EdgeId e_xv, EdgeId e_uv) {
      // u -> v via x: down(x,u) then up(x,v); v -> u via x: down(x,v) then up(x,u).
      relax_lanes(u + std::size_t{e_uv} * lanes, d + std::size_t{e_xu} * lanes, u + std::size_t{e_xv} * lanes, lanes);
      relax_lanes(d + std::size_t{e_uv} * lanes, d + std::size_t{e_xv} * lanes, u + std::size_t{e_xu} * lanes, lanes);
    });
    for (std::uint32_t i = 0; i < lanes; ++i) {
      Weight* mu = m.up.data() + (first + i) * edges;
      Weight* md = m.down.data() + (first + i) * edges;
      for (std::size_t e = 0; e < edges; ++e) {
        mu[e] = up[e * lanes + i];
        md[e] = down[e * lanes + i];
      }
    }
  }
  return m;
}

void save_metric_set(const std::filesystem::path& dir, const MetricSet& metrics) {
  std::filesystem::create_directories(dir);
  save_vector(dir / "metric_count", std::vector<std::uint32_t>{metrics.count});
  save_vector(dir / "metric_up", metrics.up);
  save_vector(dir / "metric_down", metrics.down);
}

MetricSet load_metric_set(const std::filesystem::path& dir) {
  auto count = load_vector<std::uint32_t>(dir / "metric_count");
  if (count.size() != 1 || count[0] == 0) throw IoError("metric_count must hold one positive value");
  MetricSet m;
  m.count = count[0];
  m.up = load_vector<Weight>(dir / "metric_up");
  m.down = load_vector<Weight>(dir / "metric_down");
  if (m.up.size() != m.down.size() || m.up.size() % m.count != 0)
    throw IoError("inconsistent metric files in " + dir.string());
  m.edges = m.up.size() / m.count;
  return m;
}

MmpPreprocessed mmp_preprocess(const CchTopology& topo, const TravelTimeFunctions& p, const IntervalGridConfig& cfg,
                               std::uint32_t compress_k, unsigned threads) {
  MmpPreprocessed prep;
  prep.intervals = build_intervals(cfg);
  prep.live_window = cfg.live_window;
  auto bounds = interval_lower_bounds(p, prep.intervals);
  const auto slots = static_cast<std::uint32_t>(bounds.size());
  if (compress_k == 0 || compress_k >= slots) {
    prep.slot_metric.resize(slots);
    for (std::uint32_t i = 0; i < slots; ++i) prep.slot_metric[i] = i;
    prep.metrics = customize_many(topo, bounds);
  } else {
    CompressionOptions options;
    options.threads = threads;
    Compressed c = compress(bounds, compress_k, options);
    bounds.clear();
    prep.slot_metric = std::move(c.table);
    prep.metrics = customize_many(topo, c.functions);
  }
  return prep;
}

void save_mmp(const std::filesystem::path& dir, const MmpPreprocessed& prep) {
  std::filesystem::create_directories(dir);
  std::vector<std::int64_t> iv;
  for (const DayInterval& i : prep.intervals) {
    iv.push_back(i.begin);
    iv.push_back(i.end);
    iv.push_back(i.full_day ? 1 : 0);
  }
  save_vector(dir / "mmp_intervals", iv);
  save_vector(dir / "mmp_slot_metric", prep.slot_metric);
  save_vector(dir / "mmp_live_window", std::vector<std::int64_t>{prep.live_window});
  save_metric_set(dir, prep.metrics);
}

MmpPreprocessed load_mmp(const std::filesystem::path& dir) {
  MmpPreprocessed prep;
  auto iv = load_vector<std::int64_t>(dir / "mmp_intervals");
  if (iv.size() % 3 != 0) throw IoError("mmp_intervals: size must be a multiple of 3");
  for (std::size_t i = 0; i < iv.size(); i += 3) prep.intervals.push_back({iv[i], iv[i + 1], iv[i + 2] != 0});
  prep.slot_metric = load_vector<std::uint32_t>(dir / "mmp_slot_metric");
  auto window = load_vector<std::int64_t>(dir / "mmp_live_window");
  if (window.size() != 1) throw IoError("mmp_live_window must hold one value");
  prep.live_window = window[0];
  prep.metrics = load_metric_set(dir);
  if (prep.slot_metric.size() != prep.intervals.size()) throw IoError("mmp slot table does not match intervals");
  for (auto id : prep.slot_metric)
    if (id >= prep.metrics.count) throw IoError("mmp slot table references a missing metric");
  return prep;
}

MmpUpdate mmp_update(const CchTopology& topo, const MmpPreprocessed& prep, const TravelTimeFunctions& p,
                     const LiveOverlay& overlay) {
  MmpUpdate u;
  u.tau_now = overlay.tau_now();
  u.live_window = prep.live_window;
  TrafficBounds bounds = extract_bounds(p, overlay, prep.live_window);
  u.live = basic_customize(topo, bounds.live_lower);
  u.upper = basic_customize(topo, bounds.upper);
  u.upper_perfect = perfect_customize(topo, u.upper);

  // Every lower-bound metric dominates the full-day one, so an arc whose
  // full-day weight exceeds the exact upper bound is useless for all of them.
  const EdgeId edges = topo.num_edges();
  const std::uint32_t full = prep.slot_metric[0];
  u.up_alive.assign(edges, 1);
  u.down_alive.assign(edges, 1);
  for (EdgeId e = 0; e < edges; ++e) {
    if (prep.metrics.up_at(e, full) > u.upper_perfect.weights.up[e]) {
      u.up_alive[e] = 0;
      ++u.removed_arcs;
    }
    if (prep.metrics.down_at(e, full) > u.upper_perfect.weights.down[e]) {
      u.down_alive[e] = 0;
      ++u.removed_arcs;
    }
  }
  u.lower_search = SearchTopology::reduced(topo, u.up_alive, u.down_alive);
  u.upper_search = SearchTopology::reduced(topo, u.upper_perfect.up_alive, u.upper_perfect.down_alive);
  return u;
}

MmpPotential::MmpPotential(const CchTopology& topo, const MmpPreprocessed& prep, const MmpUpdate& update,
                           MmpOptions options)
    : topo_(&topo),
      prep_(&prep),
      update_(&update),
      options_(options),
      upper_query_(topo, update.upper_search),
      span_(prep.intervals.size() + 1),
      backward_(prep.intervals.size() + 1),
      backward_query_(prep.intervals.size() + 1, 0),
      heap_(topo.num_vertices()),
      memo_(topo.num_vertices(), kInfinity),
      memo_slot_(topo.num_vertices(), kInvalidId) {}

const Weight* MmpPotential::up_weights(std::uint32_t slot) const {
  if (slot == live_slot()) return update_->live.up.data();
  return prep_->metrics.up_of(prep_->slot_metric[slot]).data();
}

const Weight* MmpPotential::down_weights(std::uint32_t slot) const {
  if (slot == live_slot()) return update_->live.down.data();
  return prep_->metrics.down_of(prep_->slot_metric[slot]).data();
}

void MmpPotential::init(Vertex s, Vertex t, Timestamp departure) {
  ++query_;
  target_ = t;
  memo_.reset();
  memo_slot_.reset();
  backward_searches_ = 0;

  Duration ub = upper_query_.run(update_->upper_perfect.weights, s, t);
  tau_max_ = ub >= kInfinity ? kInfinity : departure + ub;

  const Timestamp day = departure - time_of_day(departure);
  const std::uint32_t slots = live_slot();
  for (std::uint32_t i = 0; i < slots; ++i) {
    const DayInterval& iv = prep_->intervals[i];
    span_[i] = iv.full_day ? Span{-kInfinity, kInfinity} : Span{day + iv.begin, day + iv.end};
  }
  span_[slots] = {update_->tau_now, update_->tau_now + update_->live_window};

  auto length = [&](std::uint32_t i) { return span_[i].end - span_[i].begin; };
  // Smaller first, then the later start.
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (length(a) != length(b)) return length(a) < length(b);
    if (span_[a].begin != span_[b].begin) return span_[a].begin > span_[b].begin;
    return a < b;
  };

  selected_ = 0;
  for (std::uint32_t i = 0; i <= slots; ++i) {
    if (prep_->intervals[0].full_day && i == 0) continue;
    if (tau_max_ >= kInfinity) break;
    if (span_[i].begin <= departure && tau_max_ <= span_[i].end && better(i, selected_)) selected_ = i;
  }

  // Switching candidates form a chain of nested intervals that all contain
  // tau_max, so later evaluations only ever see tighter metrics. Each link is
  // the longest proper sub-interval of the previous one (ties: earlier start,
  // usable sooner). The live slot ends the chain: its metric bounds c, not p,
  // and does not dominate predicted metrics of sub-intervals.
  candidates_.assign(1, selected_);
  if (!options_.metric_switching || tau_max_ >= kInfinity) return;
  for (;;) {
    const std::uint32_t last = candidates_.back();
    if (last == slots) break;
    std::uint32_t next = kInvalidId;
    for (std::uint32_t i = 0; i <= slots; ++i) {
      if (i == last || !covers(last, i) || covers(i, last)) continue;
      if (span_[i].begin > tau_max_ || tau_max_ > span_[i].end) continue;
      if (next == kInvalidId || length(i) > length(next) ||
          (length(i) == length(next) && span_[i].begin < span_[next].begin))
        next = i;
    }
    if (next == kInvalidId) break;
    candidates_.push_back(next);
  }
}

std::uint32_t MmpPotential::best_slot(Timestamp t) const {
  const Timestamp from = std::min(t, tau_max_);
  for (auto it = candidates_.rbegin(); it != candidates_.rend(); ++it)
    if (span_[*it].begin <= from) return *it;
  return selected_;
}

TimestampedArray<Duration>& MmpPotential::backward(std::uint32_t slot) {
  auto& labels = backward_[slot];
  if (!labels) labels = std::make_unique<TimestampedArray<Duration>>(topo_->num_vertices(), kInfinity);
  if (backward_query_[slot] == query_) return *labels;
  backward_query_[slot] = query_;
  ++backward_searches_;
  labels->reset();
  heap_.clear();
  const ArcSet& arcs = update_->lower_search.backward;
  const Weight* weights = down_weights(slot);
  const Vertex rt = topo_->rank(target_);
  labels->set(rt, 0);
  heap_.push(rt, 0);
  while (!heap_.empty()) {
    auto [x, dx] = heap_.pop();
    for (EdgeId a = arcs.begin(x); a < arcs.end(x); ++a) {
      Weight w = weights[arcs.edge[a]];
      if (w == kInfWeight) continue;
      Vertex y = arcs.head[a];
      Duration dy = dx + w;
      if (dy < (*labels)[y]) {
        labels->set(y, dy);
        heap_.push_or_decrease(y, dy);
      }
    }
  }
  return *labels;
}

Duration MmpPotential::estimate(Vertex v, Timestamp t) {
  const std::uint32_t slot = best_slot(t);
  const Vertex rv = topo_->rank(v);
  if (memo_slot_.is_set(rv) && covers(memo_slot_[rv], slot)) return memo_[rv];
  const TimestampedArray<Duration>& down = backward(slot);
  const ArcSet& arcs = update_->lower_search.forward;
  const Weight* up = up_weights(slot);
  auto valid = [&](Vertex x) { return memo_slot_.is_set(x) && covers(memo_slot_[x], slot); };

  stack_.clear();
  stack_.push_back({rv, arcs.begin(rv), down[rv]});
  while (!stack_.empty()) {
    Frame& f = stack_.back();
    if (f.next == arcs.end(f.x)) {
      const Vertex x = f.x;
      const Duration best = f.best;
      memo_.set(x, best);
      memo_slot_.set(x, slot);
      stack_.pop_back();
      if (!stack_.empty()) {
        Frame& parent = stack_.back();
        parent.best = std::min(parent.best, sat_add(best, to_duration(up[arcs.edge[parent.next]])));
        ++parent.next;
      }
      continue;
    }
    const Weight w = up[arcs.edge[f.next]];
    if (w == kInfWeight) {
      ++f.next;
      continue;
    }
    const Vertex y = arcs.head[f.next];
    if (valid(y)) {
      f.best = std::min(f.best, sat_add(memo_[y], Duration{w}));
      ++f.next;
    } else {
      stack_.push_back({y, arcs.begin(y), down[y]});
    }
  }
  return memo_[rv];
}

}  // namespace tdpot
