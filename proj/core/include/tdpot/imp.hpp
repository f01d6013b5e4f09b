#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "tdpot/cch.hpp"
#include "tdpot/compression.hpp"
#include "tdpot/heap.hpp"
#include "tdpot/traffic.hpp"
#include "tdpot/ttf.hpp"

namespace tdpot {

struct BucketConfig {
  std::uint32_t buckets = 96;
  Duration width = 15 * 60'000;
};

/// Piecewise constant lower bounds per augmented arc. Arc a < arcs/2 is the
/// up direction of edge a, arc arcs/2 + e the down direction of edge e.
/// Storage is bucket-major through an indirection: bucket k reads function
/// table[k], whose values for all arcs are contiguous.
struct BucketProfiles {
  std::uint32_t buckets = 0;
  Duration width = 0;
  std::size_t arcs = 0;
  std::vector<std::uint32_t> table;
  std::vector<Weight> values;

  std::uint32_t functions() const { return arcs == 0 ? 0 : static_cast<std::uint32_t>(values.size() / arcs); }
  std::span<const Weight> slice(std::uint32_t f) const { return std::span(values).subspan(f * arcs, arcs); }
  const Weight* bucket(std::uint32_t k) const { return values.data() + table[k] * arcs; }
  Weight at(std::size_t arc, std::uint32_t k) const { return values[table[k] * arcs + arc]; }

  static std::size_t up_arc(EdgeId e) { return e; }
  std::size_t down_arc(EdgeId e) const { return arcs / 2 + e; }

  /// Minimum over the buckets covering [a, b] (absolute times, a <= b), all
  /// buckets when the range spans a period or b is infinite.
  Weight min_over(std::size_t arc, Timestamp a, Timestamp b, Weight all_min) const {
    if (b >= kInfinity || b - a >= Duration{buckets} * width) return all_min;
    std::int64_t k = a / width;
    const std::int64_t last = b / width;
    std::uint32_t slot = static_cast<std::uint32_t>(k % buckets);
    Weight best = kInfWeight;
    for (; k <= last; ++k) {
      best = std::min(best, at(arc, slot));
      if (++slot == buckets) slot = 0;
    }
    return best;
  }
};

/// File: u64 header (buckets, width_ms, |E+|, functions), u32 bucket-major
/// values, u32 bucket -> function table.
void save_profiles(const std::filesystem::path& file, const BucketProfiles& profiles);
BucketProfiles load_profiles(const std::filesystem::path& file);

/// Per arc minimum over all buckets.
std::vector<Weight> bucket_minima(const BucketProfiles& profiles);

struct ImpPreprocessed {
  BucketProfiles profiles;
  std::vector<Weight> b_min;  // per arc
};

/// Bucketed lower bounds of the restricted predicted distance of every arc.
/// Input arcs take the exact minimum of p per bucket; triangles u -> x -> v
/// add the first part's bucket value to the minimum of the second part over
/// the buckets the first part can arrive in.
ImpPreprocessed bucket_customize(const CchTopology& topo, const TravelTimeFunctions& p, BucketConfig cfg = {});

/// Merges the bucket slices down to k functions (elementwise minimum).
Compressed compress_profiles(ImpPreprocessed& prep, std::uint32_t k, CompressionOptions options = {});

struct ImpUpdate {
  Timestamp tau_now = 0;
  Metric upper;
  PerfectMetric upper_perfect;
  std::vector<std::uint8_t> up_alive, down_alive;
  SearchTopology search;
  std::size_t removed_arcs = 0;
};

/// Upper bounds from the combined traffic, perfected; removes arcs whose exact
/// upper bound is below their smallest bucket.
ImpUpdate imp_update(const CchTopology& topo, const ImpPreprocessed& prep, const TravelTimeFunctions& p,
                     const LiveOverlay& overlay);

/// Arrival intervals when departing from s: a forward pass over upward arcs,
/// completed lazily per vertex by a memoized search over reversed downward arcs.
class Ailr {
 public:
  Ailr(const CchTopology& topo, const ImpPreprocessed& prep, const ImpUpdate& update);

  void init(Vertex s, Timestamp departure);

  struct Interval {
    Timestamp min = kInfinity;
    Timestamp max = kInfinity;
  };
  /// Interval of original vertex v; [inf, inf] when unreachable.
  Interval arrival_interval(Vertex v) { return interval_of_rank(topo_->rank(v)); }
  Interval interval_of_rank(Vertex rank);

 private:
  struct Frame {
    Vertex x;
    EdgeId next;
    Duration lo, hi;
  };

  const CchTopology* topo_;
  const ImpPreprocessed* prep_;
  const ImpUpdate* update_;
  Timestamp departure_ = 0;
  TimestampedArray<Duration> fwd_lo_, fwd_hi_;
  TimestampedArray<Duration> lo_, hi_;
  TimestampedArray<std::uint8_t> seen_;
  std::vector<Vertex> reached_;
  std::vector<Frame> stack_;
};

class ImpPotential {
 public:
  ImpPotential(const CchTopology& topo, const ImpPreprocessed& prep, const ImpUpdate& update);

  void init(Vertex s, Vertex t, Timestamp departure);
  Duration estimate(Vertex v, Timestamp t);

  Ailr& ailr() { return ailr_; }

 private:
  struct Frame {
    Vertex x;
    EdgeId next;
    Duration best;
    Timestamp from, to;  // departure window at x
  };

  // Departure window at rank x for evaluation time t.
  std::pair<Timestamp, Timestamp> window(Vertex x, Timestamp t);
  std::int64_t bucket_index(Timestamp from) const { return from >= kInfinity ? -1 : from / width_; }

  const CchTopology* topo_;
  const ImpPreprocessed* prep_;
  const ImpUpdate* update_;
  Ailr ailr_;
  Duration width_;
  TimestampedArray<Duration> down_;
  TimestampedArray<Duration> memo_;
  TimestampedArray<std::int64_t> cursor_;
  QuaternaryHeap heap_;
  std::vector<Frame> stack_;
};

}  // namespace tdpot
