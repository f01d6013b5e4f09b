#pragma once

#include <vector>

#include "tdpot/cch.hpp"
#include "tdpot/heap.hpp"
#include "tdpot/types.hpp"

namespace tdpot {

/// Many-to-one distances to a fixed target, computed on demand. init() runs the
/// backward search on the downward arcs from t; distance(u) completes it with
/// a memoized DFS over upward arcs.
class LazyRphast {
 public:
  LazyRphast(const CchTopology& topo, const SearchTopology& search);

  /// Target given as original vertex ID. The metric must outlive the queries.
  void init(const Metric& metric, Vertex t);

  /// Exact distance from original vertex u to the target in the metric.
  Duration distance(Vertex u);

  /// Vertices reached by the backward search of the last init.
  std::size_t search_space_size() const { return search_space_; }
  /// Upward arcs relaxed by distance() calls since init.
  std::size_t relaxed() const { return relaxed_; }

  /// Backward label of a rank (kInfinity outside the search space).
  Duration backward_label(Vertex rank) const { return down_[rank]; }

 private:
  struct Frame {
    Vertex x;
    EdgeId next;
    Duration best;
  };

  const CchTopology* topo_;
  const SearchTopology* search_;
  const Metric* metric_ = nullptr;
  TimestampedArray<Duration> down_;
  TimestampedArray<Duration> memo_;
  QuaternaryHeap heap_;
  std::vector<Frame> stack_;
  std::size_t search_space_ = 0;
  std::size_t relaxed_ = 0;
};

/// CH-Potentials: time-independent distances in a lower-bound metric.
class CchPotential {
 public:
  CchPotential(const CchTopology& topo, const SearchTopology& search, const Metric& metric)
      : metric_(&metric), rphast_(topo, search) {}

  void init(Vertex, Vertex t, Timestamp) { rphast_.init(*metric_, t); }
  Duration estimate(Vertex v, Timestamp) { return rphast_.distance(v); }

  const LazyRphast& rphast() const { return rphast_; }

 private:
  const Metric* metric_;
  LazyRphast rphast_;
};

}  // namespace tdpot
