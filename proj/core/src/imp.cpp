#include "tdpot/imp.hpp"

#include <algorithm>
#include <fstream>

#include "tdpot/vector_io.hpp"

namespace tdpot {
namespace {

inline Weight add_weight(Weight a, Weight b) {
  Weight s = a + b;
  return s < a ? kInfWeight : s;
}

// Relaxes the profile of dst by the two-part path first -> second. Callers
// pass the bucket minima; returns whether dst changed.
class TriangleRelaxer {
 public:
  TriangleRelaxer(std::uint32_t buckets, Duration width) : k_(buckets), width_(width), ext_(2 * buckets) {}

  bool relax(Weight* dst, const Weight* first, Weight first_min, Weight first_ub, const Weight* second,
             Weight second_min) {
    // Departing in bucket k, the first part arrives within buckets
    // [k + shift, k + shift + span - 1].
    const auto shift = static_cast<std::uint32_t>((first_min / width_) % k_);
    std::uint64_t span = first_ub == kInfWeight ? k_ : (width_ - 1 + first_ub) / width_ - first_min / width_ + 1;
    Weight changed = 0;
    if (span >= k_) {
      for (std::uint32_t k = 0; k < k_; ++k) {
        Weight c = add_weight(first[k], second_min);
        changed |= c < dst[k];
        dst[k] = std::min(dst[k], c);
      }
      return changed != 0;
    }
    const auto w = static_cast<std::uint32_t>(span);
    Weight* m = ext_.data();
    for (std::uint32_t j = 0, src = shift; j < k_ + w; ++j) {
      m[j] = second[src];
      if (++src == k_) src = 0;
    }
    // Sliding minimum of width w by doubling: after the loop m[j] covers
    // [j, j + reach), and the final step overlaps two such windows.
    std::uint32_t reach = 1;
    while (2 * reach <= w) {
      for (std::uint32_t j = 0; j + reach < k_ + w; ++j) m[j] = std::min(m[j], m[j + reach]);
      reach *= 2;
    }
    const std::uint32_t rest = w - reach;
    for (std::uint32_t k = 0; k < k_; ++k) {
      Weight c = add_weight(first[k], std::min(m[k], m[k + rest]));
      changed |= c < dst[k];
      dst[k] = std::min(dst[k], c);
    }
    return changed != 0;
  }

 private:
  std::uint32_t k_;
  std::uint64_t width_;
  std::vector<Weight> ext_;
};

}  // namespace

void save_profiles(const std::filesystem::path& file, const BucketProfiles& profiles) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  const std::uint64_t header[4] = {profiles.buckets, static_cast<std::uint64_t>(profiles.width), profiles.arcs / 2,
                                   profiles.functions()};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(profiles.values.data()),
            static_cast<std::streamsize>(profiles.values.size() * sizeof(Weight)));
  out.write(reinterpret_cast<const char*>(profiles.table.data()),
            static_cast<std::streamsize>(profiles.table.size() * sizeof(std::uint32_t)));
  if (!out) throw IoError("write failed: " + file.string());
}

BucketProfiles load_profiles(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::uint64_t header[4];
  if (!in.read(reinterpret_cast<char*>(header), sizeof(header))) throw IoError("truncated profile header");
  BucketProfiles p;
  p.buckets = static_cast<std::uint32_t>(header[0]);
  p.width = static_cast<Duration>(header[1]);
  p.arcs = header[2] * 2;
  if (p.buckets == 0 || p.width <= 0 || header[3] == 0 || header[3] > p.buckets)
    throw IoError("invalid profile header in " + file.string());
  p.values.resize(header[3] * p.arcs);
  p.table.resize(p.buckets);
  in.read(reinterpret_cast<char*>(p.values.data()), static_cast<std::streamsize>(p.values.size() * sizeof(Weight)));
  in.read(reinterpret_cast<char*>(p.table.data()), static_cast<std::streamsize>(p.table.size() * sizeof(std::uint32_t)));
  if (!in) throw IoError("truncated profile file " + file.string());
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in " + file.string());
  for (auto f : p.table)
    if (f >= header[3]) throw IoError("profile table references a missing function");
  return p;
}

std::vector<Weight> bucket_minima(const BucketProfiles& profiles) {
  std::vector<Weight> out(profiles.arcs, kInfWeight);
  for (std::uint32_t f = 0; f < profiles.functions(); ++f) {
    const Weight* v = profiles.values.data() + f * profiles.arcs;
    for (std::size_t a = 0; a < profiles.arcs; ++a) out[a] = std::min(out[a], v[a]);
  }
  return out;
}

ImpPreprocessed bucket_customize(const CchTopology& topo, const TravelTimeFunctions& p, BucketConfig cfg) {
  const std::uint32_t K = cfg.buckets;
  const Duration beta = cfg.width;
  if (K == 0 || beta <= 0 || Duration{K} * beta != kPeriod)
    throw std::invalid_argument("buckets must partition one day");
  const std::size_t edges = topo.num_edges();
  const std::size_t arcs = 2 * edges;

  // Edge-major while customizing: profile of arc a at [a * K, (a + 1) * K).
  std::vector<Weight> prof(arcs * K, kInfWeight);
  std::vector<Weight> ub(arcs, kInfWeight);
  const std::vector<Weight> input_ub = p.upper_bounds();
  auto init_arc = [&](std::size_t arc, EdgeId in) {
    if (in == kInvalidId) return;
    Weight* dst = prof.data() + arc * K;
    for (std::uint32_t k = 0; k < K; ++k) dst[k] = to_weight(p.min_over(in, k * beta, (k + 1) * beta - 1));
    ub[arc] = input_ub[in];
  };
  for (EdgeId e = 0; e < edges; ++e) {
    init_arc(e, topo.input_up(e));
    init_arc(edges + e, topo.input_down(e));
  }

  // Bucket minimum and maximum per arc, kept current as profiles shrink.
  std::vector<Weight> lo(arcs), hi(arcs);
  auto refresh = [&](std::size_t arc) {
    const Weight* v = prof.data() + arc * K;
    Weight l = kInfWeight, h = 0;
    for (std::uint32_t k = 0; k < K; ++k) {
      l = std::min(l, v[k]);
      h = std::max(h, v[k]);
    }
    lo[arc] = l;
    hi[arc] = h;
  };
  for (std::size_t arc = 0; arc < arcs; ++arc) refresh(arc);

  TriangleRelaxer relaxer(K, beta);
  auto relax = [&](std::size_t dst, std::size_t first, std::size_t second) {
    if (lo[first] == kInfWeight || lo[second] == kInfWeight) return;
    ub[dst] = std::min(ub[dst], add_weight(ub[first], ub[second]));
    // No bucket can improve.
    if (add_weight(lo[first], lo[second]) >= hi[dst]) return;
    if (relaxer.relax(prof.data() + dst * K, prof.data() + first * K, lo[first], ub[first],
                      prof.data() + second * K, lo[second]))
      refresh(dst);
  };
  topo.for_each_lower_triangle([&](EdgeId e_xu, EdgeId e_xv, EdgeId e_uv) {
    // u -> v: down(x, u) then up(x, v). v -> u: down(x, v) then up(x, u).
    relax(e_uv, edges + e_xu, e_xv);
    relax(edges + e_uv, edges + e_xv, e_xu);
  });

  ImpPreprocessed out;
  BucketProfiles& bp = out.profiles;
  bp.buckets = K;
  bp.width = beta;
  bp.arcs = arcs;
  bp.table.resize(K);
  for (std::uint32_t k = 0; k < K; ++k) bp.table[k] = k;
  bp.values.resize(arcs * K);
  out.b_min.assign(arcs, kInfWeight);
  constexpr std::size_t kBlock = 1024;
  for (std::size_t a0 = 0; a0 < arcs; a0 += kBlock) {
    const std::size_t a1 = std::min(arcs, a0 + kBlock);
    for (std::uint32_t k = 0; k < K; ++k) {
      Weight* dst = bp.values.data() + k * arcs;
      for (std::size_t a = a0; a < a1; ++a) dst[a] = prof[a * K + k];
    }
    for (std::size_t a = a0; a < a1; ++a)
      out.b_min[a] = *std::min_element(prof.begin() + a * K, prof.begin() + (a + 1) * K);
  }
  return out;
}

Compressed compress_profiles(ImpPreprocessed& prep, std::uint32_t k, CompressionOptions options) {
  BucketProfiles& bp = prep.profiles;
  std::vector<std::span<const Weight>> slices;
  for (std::uint32_t f = 0; f < bp.functions(); ++f) slices.push_back(bp.slice(f));
  Compressed c = compress(slices, k, options);
  std::vector<Weight> values;
  values.reserve(c.functions.size() * bp.arcs);
  for (auto& f : c.functions) {
    values.insert(values.end(), f.begin(), f.end());
    std::vector<Weight>().swap(f);
  }
  std::vector<std::uint32_t> table(bp.buckets);
  for (std::uint32_t b = 0; b < bp.buckets; ++b) table[b] = c.apply(bp.table[b]);
  bp.values = std::move(values);
  bp.table = std::move(table);
  prep.b_min = bucket_minima(bp);
  return c;
}

ImpUpdate imp_update(const CchTopology& topo, const ImpPreprocessed& prep, const TravelTimeFunctions& p,
                     const LiveOverlay& overlay) {
  ImpUpdate u;
  u.tau_now = overlay.tau_now();
  TrafficBounds bounds = extract_bounds(p, overlay);
  u.upper = basic_customize(topo, bounds.upper);
  u.upper_perfect = perfect_customize(topo, u.upper);
  const EdgeId edges = topo.num_edges();
  u.up_alive.assign(edges, 1);
  u.down_alive.assign(edges, 1);
  for (EdgeId e = 0; e < edges; ++e) {
    if (u.upper_perfect.weights.up[e] < prep.b_min[e]) {
      u.up_alive[e] = 0;
      ++u.removed_arcs;
    }
    if (u.upper_perfect.weights.down[e] < prep.b_min[edges + e]) {
      u.down_alive[e] = 0;
      ++u.removed_arcs;
    }
  }
  u.search = SearchTopology::reduced(topo, u.up_alive, u.down_alive);
  return u;
}

Ailr::Ailr(const CchTopology& topo, const ImpPreprocessed& prep, const ImpUpdate& update)
    : topo_(&topo),
      prep_(&prep),
      update_(&update),
      fwd_lo_(topo.num_vertices(), kInfinity),
      fwd_hi_(topo.num_vertices(), kInfinity),
      lo_(topo.num_vertices(), kInfinity),
      hi_(topo.num_vertices(), kInfinity),
      seen_(topo.num_vertices(), 0) {}

void Ailr::init(Vertex s, Timestamp departure) {
  departure_ = departure;
  fwd_lo_.reset();
  fwd_hi_.reset();
  lo_.reset();
  hi_.reset();
  seen_.reset();
  // The upward graph is acyclic in rank order, so relaxing the reached
  // vertices by ascending rank gives exact values for both bounds.
  const ArcSet& arcs = update_->search.forward;
  reached_.assign(1, topo_->rank(s));
  seen_.set(reached_[0], 1);
  for (std::size_t i = 0; i < reached_.size(); ++i)
    for (EdgeId a = arcs.begin(reached_[i]); a < arcs.end(reached_[i]); ++a)
      if (!seen_[arcs.head[a]]) {
        seen_.set(arcs.head[a], 1);
        reached_.push_back(arcs.head[a]);
      }
  std::sort(reached_.begin(), reached_.end());
  fwd_lo_.set(reached_.front(), 0);
  fwd_hi_.set(reached_.front(), 0);
  const auto& up_hi = update_->upper_perfect.weights.up;
  for (Vertex x : reached_) {
    const Duration lo = fwd_lo_[x], hi = fwd_hi_[x];
    if (lo >= kInfinity) continue;
    for (EdgeId a = arcs.begin(x); a < arcs.end(x); ++a) {
      const EdgeId e = arcs.edge[a];
      const Vertex y = arcs.head[a];
      const Duration l = sat_add(lo, to_duration(prep_->b_min[e]));
      if (l < fwd_lo_[y]) fwd_lo_.set(y, l);
      const Duration h = sat_add(hi, to_duration(up_hi[e]));
      if (h < fwd_hi_[y]) fwd_hi_.set(y, h);
    }
  }
}

Ailr::Interval Ailr::interval_of_rank(Vertex rank) {
  if (!lo_.is_set(rank)) {
    // Reversed downward arcs lead from x to higher ranked y with the down weight y -> x.
    const ArcSet& arcs = update_->search.backward;
    const auto& down_hi = update_->upper_perfect.weights.down;
    const std::size_t edges = topo_->num_edges();
    stack_.clear();
    stack_.push_back({rank, arcs.begin(rank), fwd_lo_[rank], fwd_hi_[rank]});
    while (!stack_.empty()) {
      Frame& f = stack_.back();
      if (f.next == arcs.end(f.x)) {
        const Frame done = f;
        lo_.set(done.x, done.lo);
        hi_.set(done.x, done.hi);
        stack_.pop_back();
        if (!stack_.empty()) {
          Frame& parent = stack_.back();
          const EdgeId e = arcs.edge[parent.next];
          parent.lo = std::min(parent.lo, sat_add(done.lo, to_duration(prep_->b_min[edges + e])));
          parent.hi = std::min(parent.hi, sat_add(done.hi, to_duration(down_hi[e])));
          ++parent.next;
        }
        continue;
      }
      const Vertex y = arcs.head[f.next];
      if (lo_.is_set(y)) {
        const EdgeId e = arcs.edge[f.next];
        f.lo = std::min(f.lo, sat_add(lo_[y], to_duration(prep_->b_min[edges + e])));
        f.hi = std::min(f.hi, sat_add(hi_[y], to_duration(down_hi[e])));
        ++f.next;
      } else {
        stack_.push_back({y, arcs.begin(y), fwd_lo_[y], fwd_hi_[y]});
      }
    }
  }
  const Duration lo = lo_[rank], hi = hi_[rank];
  return {lo >= kInfinity ? kInfinity : departure_ + lo, hi >= kInfinity ? kInfinity : departure_ + hi};
}

ImpPotential::ImpPotential(const CchTopology& topo, const ImpPreprocessed& prep, const ImpUpdate& update)
    : topo_(&topo),
      prep_(&prep),
      update_(&update),
      ailr_(topo, prep, update),
      width_(prep.profiles.width),
      down_(topo.num_vertices(), kInfinity),
      memo_(topo.num_vertices(), kInfinity),
      cursor_(topo.num_vertices(), 0),
      heap_(topo.num_vertices()) {}

std::pair<Timestamp, Timestamp> ImpPotential::window(Vertex x, Timestamp t) {
  const Ailr::Interval iv = ailr_.interval_of_rank(x);
  // Unknown or unbounded arrival: every bucket applies.
  if (iv.min >= kInfinity || iv.max >= kInfinity) return {kInfinity, kInfinity};
  const Timestamp from = std::min(std::max(iv.min, t), iv.max);
  return {from, iv.max};
}

void ImpPotential::init(Vertex s, Vertex t, Timestamp departure) {
  ailr_.init(s, departure);
  down_.reset();
  memo_.reset();
  cursor_.reset();
  heap_.clear();
  const ArcSet& arcs = update_->search.backward;
  const BucketProfiles& bp = prep_->profiles;
  const std::size_t edges = topo_->num_edges();
  const Vertex rt = topo_->rank(t);
  down_.set(rt, 0);
  heap_.push(rt, 0);
  while (!heap_.empty()) {
    auto [x, dx] = heap_.pop();
    for (EdgeId a = arcs.begin(x); a < arcs.end(x); ++a) {
      const Vertex y = arcs.head[a];
      const std::size_t arc = edges + arcs.edge[a];
      auto [from, to] = window(y, 0);
      const Weight w = bp.min_over(arc, from, to, prep_->b_min[arc]);
      if (w == kInfWeight) continue;
      const Duration dy = dx + w;
      if (dy < down_[y]) {
        down_.set(y, dy);
        heap_.push_or_decrease(y, dy);
      }
    }
  }
}

Duration ImpPotential::estimate(Vertex v, Timestamp t) {
  const Vertex rv = topo_->rank(v);
  auto [v_from, v_to] = window(rv, t);
  if (memo_.is_set(rv) && bucket_index(v_from) >= cursor_[rv]) return memo_[rv];

  const ArcSet& arcs = update_->search.forward;
  const BucketProfiles& bp = prep_->profiles;
  stack_.clear();
  stack_.push_back({rv, arcs.begin(rv), down_[rv], v_from, v_to});
  while (!stack_.empty()) {
    Frame& f = stack_.back();
    if (f.next == arcs.end(f.x)) {
      const Frame done = f;
      memo_.set(done.x, done.best);
      cursor_.set(done.x, bucket_index(done.from));
      stack_.pop_back();
      if (!stack_.empty()) {
        Frame& parent = stack_.back();
        const EdgeId e = arcs.edge[parent.next];
        const Weight w = bp.min_over(e, parent.from, parent.to, prep_->b_min[e]);
        parent.best = std::min(parent.best, sat_add(done.best, to_duration(w)));
        ++parent.next;
      }
      continue;
    }
    const EdgeId e = arcs.edge[f.next];
    if (prep_->b_min[e] == kInfWeight) {
      ++f.next;
      continue;
    }
    const Vertex y = arcs.head[f.next];
    auto [y_from, y_to] = window(y, t);
    if (memo_.is_set(y) && bucket_index(y_from) >= cursor_[y]) {
      const Weight w = bp.min_over(e, f.from, f.to, prep_->b_min[e]);
      f.best = std::min(f.best, sat_add(memo_[y], to_duration(w)));
      ++f.next;
    } else {
      stack_.push_back({y, arcs.begin(y), down_[y], y_from, y_to});
    }
  }
  return memo_[rv];
}

}  // namespace tdpot
