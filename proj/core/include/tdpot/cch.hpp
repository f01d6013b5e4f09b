#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tdpot/graph.hpp"
#include "tdpot/heap.hpp"
#include "tdpot/types.hpp"

namespace tdpot {

/// Total vertex order: rank[v] is the position of v, vertex[r] the inverse.
struct NodeOrder {
  std::vector<Vertex> rank;
  std::vector<Vertex> vertex;

  /// Throws GraphError unless ranks form a permutation of [0, n).
  static NodeOrder from_ranks(std::vector<Vertex> ranks);
  Vertex size() const { return static_cast<Vertex>(rank.size()); }
};

/// Nested dissection with unit-capacity vertex cuts between the ends of
/// distance-based projections; separators are ranked above both halves.
/// Deterministic.
NodeOrder compute_order(const Graph& g);
NodeOrder random_order(Vertex n, std::uint64_t seed);

void save_order(const std::filesystem::path& file, const NodeOrder& order);
NodeOrder load_order(const std::filesystem::path& file);

/// Metric-independent augmented graph in rank space. Every augmented edge
/// {x, y} with x < y is stored once in the upward adjacency of x; it carries
/// an up weight (x -> y) and a down weight (y -> x) in each metric.
class CchTopology {
 public:
  CchTopology() = default;

  /// Elimination game closure of g under the order.
  static CchTopology contract(const Graph& g, NodeOrder order);

  Vertex num_vertices() const { return static_cast<Vertex>(up_first_out_.size() - 1); }
  EdgeId num_edges() const { return static_cast<EdgeId>(up_head_.size()); }

  EdgeId up_begin(Vertex x) const { return up_first_out_[x]; }
  EdgeId up_end(Vertex x) const { return up_first_out_[x + 1]; }
  Vertex up_head(EdgeId e) const { return up_head_[e]; }
  Vertex lower(EdgeId e) const { return tail_[e]; }

  /// Edge {x, y} (ranks, any order) or kInvalidId.
  EdgeId find_edge(Vertex x, Vertex y) const;

  /// Input edge providing the initial up / down weight of an augmented edge.
  EdgeId input_up(EdgeId e) const { return input_up_[e]; }
  EdgeId input_down(EdgeId e) const { return input_down_[e]; }

  const NodeOrder& order() const { return order_; }
  Vertex rank(Vertex v) const { return order_.rank[v]; }
  Vertex vertex(Vertex r) const { return order_.vertex[r]; }

  std::span<const EdgeId> up_first_out() const { return up_first_out_; }
  std::span<const Vertex> up_heads() const { return up_head_; }

  /// Number of lower triangles, i.e. the customization work.
  std::uint64_t count_triangles() const;

  /// Calls f(e_xu, e_xv, e_uv) for every triangle x < u < v, grouped by ascending x.
  template <class F>
  void for_each_lower_triangle(F&& f) const;

  void save(const std::filesystem::path& dir) const;
  static CchTopology load(const std::filesystem::path& dir, const Graph& g, NodeOrder order);

 private:
  void build_input_mapping(const Graph& g);

  NodeOrder order_;
  std::vector<EdgeId> up_first_out_{0};
  std::vector<Vertex> up_head_;
  std::vector<Vertex> tail_;
  std::vector<EdgeId> input_up_;
  std::vector<EdgeId> input_down_;
};

/// Weights of the augmented graph for one metric.
struct Metric {
  std::vector<Weight> up;
  std::vector<Weight> down;
  /// Middle vertex (rank) of the shortcut, kInvalidId when the weight stems
  /// from the input edge. Empty unless requested.
  std::vector<Vertex> up_middle;
  std::vector<Vertex> down_middle;
};

/// Initial augmented weights from input weights (kInfWeight where no input edge).
Metric initial_metric(const CchTopology& topo, std::span<const Weight> input_weights);

/// Lower triangle relaxation in ascending rank order: afterwards up/down are
/// the shortest distances over lower-ranked interior vertices.
Metric basic_customize(const CchTopology& topo, std::span<const Weight> input_weights, bool track_middle = false);

/// In-place variant on already initialized weights.
void customize_in_place(const CchTopology& topo, Metric& metric, bool track_middle = false);

struct PerfectMetric {
  Metric weights;  // exact distances between the endpoints of every edge
  std::vector<std::uint8_t> up_alive;
  std::vector<std::uint8_t> down_alive;
};

/// Upper and intermediate triangle relaxation in descending rank order.
/// An arc stays alive iff its basic weight equals the exact distance and is finite.
PerfectMetric perfect_customize(const CchTopology& topo, const Metric& basic);

/// Upward adjacency in rank space restricted to a subset of arcs; `edge`
/// points back into the full augmented edge numbering so metrics can be shared.
struct ArcSet {
  std::vector<EdgeId> first_out{0};
  std::vector<Vertex> head;
  std::vector<EdgeId> edge;

  EdgeId begin(Vertex x) const { return first_out[x]; }
  EdgeId end(Vertex x) const { return first_out[x + 1]; }
  std::size_t size() const { return head.size(); }
};

/// Forward arcs use up weights (x -> y), backward arcs down weights (y -> x);
/// both are stored in the upward adjacency of the lower endpoint x.
struct SearchTopology {
  ArcSet forward;
  ArcSet backward;

  static SearchTopology full(const CchTopology& topo);
  static SearchTopology reduced(const CchTopology& topo, std::span<const std::uint8_t> up_alive,
                                std::span<const std::uint8_t> down_alive);
};

/// Bidirectional upward CH query with reusable state.
class ChQuery {
 public:
  ChQuery(const CchTopology& topo, const SearchTopology& search);

  /// Distance in the metric between original vertex IDs.
  Duration run(const Metric& metric, Vertex s, Vertex t);

  /// Unpacked original-vertex path of the last run. Needs middle vertices and
  /// the full topology.
  std::vector<Vertex> path(const Metric& metric) const;

  std::size_t last_search_space() const { return search_space_; }

 private:
  void unpack(const Metric& metric, Vertex from, Vertex to, std::vector<Vertex>& out) const;

  const CchTopology* topo_;
  const SearchTopology* search_;
  TimestampedArray<Duration> fwd_, bwd_;
  TimestampedArray<Vertex> fwd_pred_, bwd_pred_;
  QuaternaryHeap fwd_heap_, bwd_heap_;
  Vertex meet_ = kInvalidId, s_ = kInvalidId, t_ = kInvalidId;
  std::size_t search_space_ = 0;
};

Duration ch_query(const CchTopology& topo, const Metric& metric, Vertex s, Vertex t);

template <class F>
void CchTopology::for_each_lower_triangle(F&& f) const {
  const Vertex n = num_vertices();
  std::vector<EdgeId> mark(n, kInvalidId);
  for (Vertex x = 0; x < n; ++x) {
    for (EdgeId e = up_begin(x); e < up_end(x); ++e) mark[up_head_[e]] = e;
    for (EdgeId e_xu = up_begin(x); e_xu < up_end(x); ++e_xu) {
      Vertex u = up_head_[e_xu];
      for (EdgeId e_uv = up_begin(u); e_uv < up_end(u); ++e_uv) {
        EdgeId e_xv = mark[up_head_[e_uv]];
        if (e_xv != kInvalidId) f(e_xu, e_xv, e_uv);
      }
    }
    for (EdgeId e = up_begin(x); e < up_end(x); ++e) mark[up_head_[e]] = kInvalidId;
  }
}

}  // namespace tdpot
