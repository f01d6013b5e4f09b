#include "tdpot/graph.hpp"

#include <algorithm>
#include <string>

#include "tdpot/vector_io.hpp"

namespace tdpot {

Graph::Graph(std::vector<EdgeId> first_out, std::vector<Vertex> head)
    : first_out_(std::move(first_out)), head_(std::move(head)) {
  if (first_out_.empty() || first_out_.front() != 0 || first_out_.back() != head_.size())
    throw GraphError("first_out must start at 0 and end at the edge count");
  if (!std::is_sorted(first_out_.begin(), first_out_.end()))
    throw GraphError("first_out must be non-decreasing");
  const Vertex n = num_vertices();
  for (Vertex u = 0; u < n; ++u) {
    std::vector<Vertex> seen(head_.begin() + first_out_[u], head_.begin() + first_out_[u + 1]);
    for (Vertex v : seen)
      if (v >= n) throw GraphError("head out of range at vertex " + std::to_string(u));
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      throw GraphError("duplicate edge out of vertex " + std::to_string(u));
  }
}

Graph Graph::from_arcs(Vertex n, std::vector<std::pair<Vertex, Vertex>> arcs) {
  std::sort(arcs.begin(), arcs.end());
  std::vector<EdgeId> first_out(n + 1, 0);
  std::vector<Vertex> head;
  head.reserve(arcs.size());
  for (auto [u, v] : arcs) {
    if (u >= n || v >= n) throw GraphError("arc endpoint out of range");
    ++first_out[u + 1];
    head.push_back(v);
  }
  for (Vertex u = 0; u < n; ++u) first_out[u + 1] += first_out[u];
  return Graph(std::move(first_out), std::move(head));
}

std::vector<Vertex> Graph::tails() const {
  std::vector<Vertex> tail(num_edges());
  for (Vertex u = 0; u < num_vertices(); ++u)
    for (EdgeId e = begin(u); e < end(u); ++e) tail[e] = u;
  return tail;
}

EdgeId Graph::find_edge(Vertex u, Vertex v) const {
  for (EdgeId e = begin(u); e < end(u); ++e)
    if (head_[e] == v) return e;
  return kInvalidId;
}

ReversedGraph reverse(const Graph& g) {
  const Vertex n = g.num_vertices();
  const EdgeId m = g.num_edges();
  std::vector<EdgeId> first_out(n + 1, 0);
  for (EdgeId e = 0; e < m; ++e) ++first_out[g.head(e) + 1];
  for (Vertex v = 0; v < n; ++v) first_out[v + 1] += first_out[v];

  std::vector<Vertex> head(m);
  std::vector<EdgeId> original(m);
  std::vector<EdgeId> fill(first_out.begin(), first_out.end() - 1);
  for (Vertex u = 0; u < n; ++u) {
    for (EdgeId e = g.begin(u); e < g.end(u); ++e) {
      EdgeId r = fill[g.head(e)]++;
      head[r] = u;
      original[r] = e;
    }
  }
  return {Graph(std::move(first_out), std::move(head)), std::move(original)};
}

std::vector<std::vector<Vertex>> undirected_neighbors(const Graph& g) {
  std::vector<std::vector<Vertex>> nb(g.num_vertices());
  for (Vertex u = 0; u < g.num_vertices(); ++u) {
    for (EdgeId e = g.begin(u); e < g.end(u); ++e) {
      Vertex v = g.head(e);
      if (v == u) continue;
      nb[u].push_back(v);
      nb[v].push_back(u);
    }
  }
  for (auto& list : nb) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return nb;
}

void save_graph(const std::filesystem::path& dir, const Graph& g) {
  std::filesystem::create_directories(dir);
  save_vector(dir / "first_out", std::vector<EdgeId>(g.first_out().begin(), g.first_out().end()));
  save_vector(dir / "head", std::vector<Vertex>(g.heads().begin(), g.heads().end()));
}

Graph load_graph(const std::filesystem::path& dir) {
  return Graph(load_vector<EdgeId>(dir / "first_out"), load_vector<Vertex>(dir / "head"));
}

}  // namespace tdpot
