#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "tdpot/types.hpp"

namespace tdpot {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simple directed graph in compressed sparse row form. Edge IDs are the
/// positions in the head array, so out-edges of u are [first_out[u], first_out[u+1]).
class Graph {
 public:
  Graph() : first_out_{0} {}
  Graph(std::vector<EdgeId> first_out, std::vector<Vertex> head);

  /// Builds the CSR from an unordered arc list. Arcs are sorted by (tail, head);
  /// duplicates are rejected.
  static Graph from_arcs(Vertex n, std::vector<std::pair<Vertex, Vertex>> arcs);

  Vertex num_vertices() const { return static_cast<Vertex>(first_out_.size() - 1); }
  EdgeId num_edges() const { return static_cast<EdgeId>(head_.size()); }

  EdgeId begin(Vertex u) const { return first_out_[u]; }
  EdgeId end(Vertex u) const { return first_out_[u + 1]; }
  Vertex head(EdgeId e) const { return head_[e]; }
  Vertex out_degree(Vertex u) const { return end(u) - begin(u); }

  std::span<const EdgeId> first_out() const { return first_out_; }
  std::span<const Vertex> heads() const { return head_; }

  /// tail[e] for every edge.
  std::vector<Vertex> tails() const;

  /// Edge ID of uv or kInvalidId.
  EdgeId find_edge(Vertex u, Vertex v) const;

 private:
  std::vector<EdgeId> first_out_;
  std::vector<Vertex> head_;
};

struct ReversedGraph {
  Graph graph;
  /// original_edge[e'] is the edge uv of the input for reversed edge vu = e'.
  std::vector<EdgeId> original_edge;
};

ReversedGraph reverse(const Graph& g);

/// Undirected view: for every vertex the sorted set of neighbors ignoring
/// direction. Used by ordering and contraction.
std::vector<std::vector<Vertex>> undirected_neighbors(const Graph& g);

void save_graph(const std::filesystem::path& dir, const Graph& g);
Graph load_graph(const std::filesystem::path& dir);

}  // namespace tdpot
