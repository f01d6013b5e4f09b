#pragma once

#include <algorithm>
#include <concepts>
#include <optional>
#include <span>
#include <vector>

#include "tdpot/graph.hpp"
#include "tdpot/heap.hpp"
#include "tdpot/types.hpp"

namespace tdpot {

struct SearchResult {
  Duration distance = kInfinity;
  std::vector<Vertex> path;  // s ... t, empty if unreachable
  std::size_t pops = 0;
  std::size_t relaxed = 0;
  std::size_t resettles = 0;  // pops of vertices that had been popped before
};

template <class W>
concept TravelTimeFn = requires(const W& w, EdgeId e, Timestamp t) {
  { w(e, t) } -> std::convertible_to<Duration>;
};

/// Time-dependent A* potential. estimate() may mutate memoization state;
/// kInfinity means the target is unreachable from v.
template <class P>
concept Potential = requires(P& p, Vertex v, Timestamp t) {
  p.init(v, v, t);
  { p.estimate(v, t) } -> std::convertible_to<Duration>;
};

struct ZeroPotential {
  void init(Vertex, Vertex, Timestamp) {}
  Duration estimate(Vertex, Timestamp) const { return 0; }
};

namespace detail {

inline std::vector<Vertex> unwind(const TimestampedArray<Vertex>& pred, Vertex s, Vertex t, Vertex n) {
  std::vector<Vertex> path{t};
  for (Vertex v = t, steps = 0; v != s && steps <= n; ++steps) {
    v = pred[v];
    if (v == kInvalidId) return {};
    path.push_back(v);
  }
  std::reverse(path.begin(), path.end());
  return path.front() == s ? path : std::vector<Vertex>{};
}

}  // namespace detail

/// Time-dependent Dijkstra with reusable state. Labels are absolute arrival times.
class TdDijkstra {
 public:
  explicit TdDijkstra(const Graph& g)
      : g_(&g), arrival_(g.num_vertices(), kInfinity), pred_(g.num_vertices(), kInvalidId), heap_(g.num_vertices()) {}

  template <TravelTimeFn W>
  SearchResult run(const W& weight, Vertex s, Vertex t, Timestamp departure) {
    SearchResult result;
    run_until(weight, s, departure, [&](Vertex v, Timestamp) { return v != t; }, &result);
    if (arrival_[t] < kInfinity && settled_target_) {
      result.distance = arrival_[t] - departure;
      result.path = detail::unwind(pred_, s, t, g_->num_vertices());
    }
    return result;
  }

  /// Settles vertices in order; on_settle(v, arrival) returns false to stop.
  template <TravelTimeFn W, class OnSettle>
  void run_until(const W& weight, Vertex s, Timestamp departure, OnSettle&& on_settle, SearchResult* stats = nullptr) {
    arrival_.reset();
    pred_.reset();
    heap_.clear();
    settled_target_ = false;
    arrival_.set(s, departure);
    heap_.push(s, departure);
    std::size_t pops = 0, relaxed = 0;
    while (!heap_.empty()) {
      auto [u, du] = heap_.pop();
      ++pops;
      if (!on_settle(u, du)) {
        settled_target_ = true;
        break;
      }
      for (EdgeId e = g_->begin(u); e < g_->end(u); ++e) {
        ++relaxed;
        Duration w = weight(e, du);
        if (w >= kInfinity) continue;
        Vertex v = g_->head(e);
        Timestamp dv = du + w;
        if (dv < arrival_[v]) {
          arrival_.set(v, dv);
          pred_.set(v, u);
          heap_.push_or_decrease(v, dv);
        }
      }
    }
    if (stats) {
      stats->pops = pops;
      stats->relaxed = relaxed;
    }
  }

  Timestamp arrival(Vertex v) const { return arrival_[v]; }

 private:
  const Graph* g_;
  TimestampedArray<Timestamp> arrival_;
  TimestampedArray<Vertex> pred_;
  QuaternaryHeap heap_;
  bool settled_target_ = false;
};

template <TravelTimeFn W>
SearchResult td_dijkstra(const Graph& g, const W& weight, Vertex s, Vertex t, Timestamp departure) {
  TdDijkstra search(g);
  return search.run(weight, s, t, departure);
}

struct AstarOptions {
  /// Walk through vertices whose only other out-edge continues a chain
  /// instead of queueing them (and evaluating their potential).
  bool skip_chains = false;
  /// Keep the list of popped vertices for diagnostics.
  bool record_settled = false;
};

/// Label-correcting A*: a vertex improved after it was popped is queued again,
/// which keeps the search exact for lower-bound potentials that are not feasible.
class TdAstar {
 public:
  explicit TdAstar(const Graph& g)
      : g_(&g),
        arrival_(g.num_vertices(), kInfinity),
        pred_(g.num_vertices(), kInvalidId),
        popped_(g.num_vertices(), 0),
        heap_(g.num_vertices()) {}

  template <TravelTimeFn W, Potential P>
  SearchResult run(const W& weight, P& potential, Vertex s, Vertex t, Timestamp departure,
                   AstarOptions options = {}) {
    arrival_.reset();
    pred_.reset();
    popped_.reset();
    heap_.clear();
    settled_.clear();
    SearchResult result;

    potential.init(s, t, departure);
    Duration est = potential.estimate(s, departure);
    if (est >= kInfinity) return result;
    arrival_.set(s, departure);
    heap_.push(s, departure + est);

    while (!heap_.empty()) {
      auto [u, key] = heap_.pop();
      ++result.pops;
      if (popped_[u]) ++result.resettles;
      popped_.set(u, 1);
      if (options.record_settled) settled_.push_back(u);
      if (u == t) break;
      const Timestamp du = arrival_[u];
      for (EdgeId e = g_->begin(u); e < g_->end(u); ++e) {
        ++result.relaxed;
        Duration w = weight(e, du);
        if (w >= kInfinity) continue;
        Vertex v = g_->head(e);
        Timestamp dv = du + w;
        if (dv >= arrival_[v]) continue;
        arrival_.set(v, dv);
        pred_.set(v, u);
        if (options.skip_chains) {
          auto end = walk_chain(weight, u, v, t, result);
          if (!end) continue;
          v = *end;
          dv = arrival_[v];
        }
        Duration h = potential.estimate(v, dv);
        if (h >= kInfinity) continue;
        heap_.push_or_decrease(v, dv + h);
      }
    }
    if (arrival_[t] < kInfinity && popped_[t]) {
      result.distance = arrival_[t] - departure;
      result.path = detail::unwind(pred_, s, t, g_->num_vertices());
    }
    return result;
  }

  Timestamp arrival(Vertex v) const { return arrival_[v]; }
  const std::vector<Vertex>& settled() const { return settled_; }

 private:
  // Follows degree-two chains starting with the freshly improved edge from->v.
  // Returns the vertex to queue, or nothing if the walk stopped because a
  // chain vertex could not be improved.
  template <TravelTimeFn W>
  std::optional<Vertex> walk_chain(const W& weight, Vertex from, Vertex v, Vertex t, SearchResult& result) {
    const Vertex start = v;
    for (Vertex steps = 0; steps < g_->num_vertices(); ++steps) {
      if (v == t || heap_.contains(v)) return v;
      EdgeId next = kInvalidId;
      for (EdgeId e = g_->begin(v); e < g_->end(v); ++e) {
        if (g_->head(e) == from) continue;
        if (next != kInvalidId) return v;
        next = e;
      }
      if (next == kInvalidId) return v;
      Vertex w = g_->head(next);
      if (w == start) return v;
      ++result.relaxed;
      Duration d = weight(next, arrival_[v]);
      if (d >= kInfinity) return v;
      Timestamp dw = arrival_[v] + d;
      if (dw >= arrival_[w]) return std::nullopt;
      arrival_.set(w, dw);
      pred_.set(w, v);
      from = v;
      v = w;
    }
    return v;
  }

  const Graph* g_;
  TimestampedArray<Timestamp> arrival_;
  TimestampedArray<Vertex> pred_;
  TimestampedArray<std::uint8_t> popped_;
  QuaternaryHeap heap_;
  std::vector<Vertex> settled_;
};

template <TravelTimeFn W, Potential P>
SearchResult astar(const Graph& g, const W& weight, Vertex s, Vertex t, Timestamp departure, P& potential,
                   AstarOptions options = {}) {
  TdAstar search(g);
  return search.run(weight, potential, s, t, departure, options);
}

struct FeasibilityViolation {
  EdgeId edge;
  Timestamp time;
  Duration reduced_weight;  // negative
};

/// Checks pi(v, t + w(uv, t)) + w(uv, t) - pi(u, t) >= 0 on the sampled
/// (edge, departure) pairs. Pairs where either estimate is infinite are skipped.
template <TravelTimeFn W, Potential P>
std::vector<FeasibilityViolation> check_feasibility(const Graph& g, const W& weight, P& potential,
                                                    std::span<const std::pair<EdgeId, Timestamp>> samples) {
  std::vector<FeasibilityViolation> violations;
  auto first_out = g.first_out();
  for (auto [e, t] : samples) {
    Vertex u = static_cast<Vertex>(std::upper_bound(first_out.begin(), first_out.end(), e) - first_out.begin() - 1);
    Duration w = weight(e, t);
    if (w >= kInfinity) continue;
    Duration pu = potential.estimate(u, t);
    Duration pv = potential.estimate(g.head(e), t + w);
    if (pu >= kInfinity || pv >= kInfinity) continue;
    Duration reduced = pv + w - pu;
    if (reduced < 0) violations.push_back({e, t, reduced});
  }
  return violations;
}

}  // namespace tdpot
