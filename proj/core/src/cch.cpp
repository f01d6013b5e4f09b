#include "tdpot/cch.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "tdpot/vector_io.hpp"

namespace tdpot {

NodeOrder NodeOrder::from_ranks(std::vector<Vertex> ranks) {
  NodeOrder order;
  order.vertex.assign(ranks.size(), kInvalidId);
  for (Vertex v = 0; v < ranks.size(); ++v) {
    Vertex r = ranks[v];
    if (r >= ranks.size() || order.vertex[r] != kInvalidId) throw GraphError("order is not a permutation");
    order.vertex[r] = v;
  }
  order.rank = std::move(ranks);
  return order;
}

NodeOrder random_order(Vertex n, std::uint64_t seed) {
  std::vector<Vertex> ranks(n);
  std::iota(ranks.begin(), ranks.end(), Vertex{0});
  std::mt19937_64 rng(seed);
  std::shuffle(ranks.begin(), ranks.end(), rng);
  return NodeOrder::from_ranks(std::move(ranks));
}

namespace {

class Dissector {
 public:
  explicit Dissector(const Graph& g)
      : nb_(undirected_neighbors(g)),
        n_(g.num_vertices()),
        rank_(n_, kInvalidId),
        member_(n_, 0),
        seen_(n_, 0),
        level_(n_, 0),
        local_(n_, 0),
        next_rank_(n_) {}

  std::vector<Vertex> run() {
    std::vector<std::vector<Vertex>> stack;
    std::vector<Vertex> all(n_);
    std::iota(all.begin(), all.end(), Vertex{0});
    stack.push_back(std::move(all));
    while (!stack.empty()) {
      std::vector<Vertex> part = std::move(stack.back());
      stack.pop_back();
      for (auto& component : components(part)) dissect(std::move(component), stack);
    }
    return std::move(rank_);
  }

 private:
  static constexpr std::size_t kLeafSize = 3;
  static constexpr std::size_t kSmallComponent = 64;

  void assign(std::span<const Vertex> vertices) {
    for (Vertex v : vertices) rank_[v] = --next_rank_;
  }

  std::vector<std::vector<Vertex>> components(const std::vector<Vertex>& part) {
    ++stamp_;
    for (Vertex v : part) member_[v] = stamp_;
    std::vector<std::vector<Vertex>> result;
    for (Vertex root : part) {
      if (seen_[root] == stamp_) continue;
      std::vector<Vertex> comp{root};
      seen_[root] = stamp_;
      for (std::size_t i = 0; i < comp.size(); ++i)
        for (Vertex w : nb_[comp[i]])
          if (member_[w] == stamp_ && seen_[w] != stamp_) {
            seen_[w] = stamp_;
            comp.push_back(w);
          }
      result.push_back(std::move(comp));
    }
    return result;
  }

  // BFS inside the current component (member_ == stamp_); fills level_ and
  // returns vertices in visiting order.
  std::vector<Vertex> bfs(Vertex root, std::size_t size) {
    ++visit_;
    std::vector<Vertex> queue;
    queue.reserve(size);
    queue.push_back(root);
    visited_at(root) = visit_;
    level_[root] = 0;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      Vertex u = queue[i];
      for (Vertex w : nb_[u]) {
        if (member_[w] != stamp_ || visited_at(w) == visit_) continue;
        visited_at(w) = visit_;
        level_[w] = level_[u] + 1;
        queue.push_back(w);
      }
    }
    return queue;
  }

  std::uint32_t& visited_at(Vertex v) {
    if (visited_.size() < n_) visited_.assign(n_, 0);
    return visited_[v];
  }

  struct Cut {
    std::vector<Vertex> lower, separator, upper;
    bool valid = false;
  };

  // Distances from root inside the current component.
  std::vector<std::uint32_t> distances(Vertex root, const std::vector<Vertex>& comp) {
    bfs(root, comp.size());
    std::vector<std::uint32_t> d(comp.size());
    for (std::size_t i = 0; i < comp.size(); ++i) d[i] = level_[comp[i]];
    return d;
  }

  // Minimum vertex cut between the quarter of the component with the smallest
  // key and the quarter with the largest, by unit-capacity augmenting paths on
  // the split-vertex network.
  Cut flow_cut(const std::vector<Vertex>& comp, const std::vector<std::int64_t>& key) {
    const std::uint32_t k = static_cast<std::uint32_t>(comp.size());
    std::vector<std::uint32_t> by_key(k);
    std::iota(by_key.begin(), by_key.end(), 0u);
    std::stable_sort(by_key.begin(), by_key.end(), [&](std::uint32_t a, std::uint32_t b) { return key[a] < key[b]; });
    const std::uint32_t quarter = std::max<std::uint32_t>(1, k / 4);
    std::vector<std::int8_t> side(k, 0);  // -1 source, +1 sink
    for (std::uint32_t i = 0; i < quarter; ++i) {
      side[by_key[i]] = -1;
      side[by_key[k - 1 - i]] = 1;
    }

    // Local CSR with the position of the reverse entry.
    std::vector<std::uint32_t> first(k + 1, 0), adj, mirror;
    for (std::uint32_t i = 0; i < k; ++i) {
      for (Vertex w : nb_[comp[i]])
        if (member_[w] == stamp_) adj.push_back(local_[w]);
      first[i + 1] = static_cast<std::uint32_t>(adj.size());
      std::sort(adj.begin() + first[i], adj.end());
    }
    for (std::uint32_t i = 0; i < k; ++i)
      if (side[i] < 0)
        for (std::uint32_t a = first[i]; a < first[i + 1]; ++a)
          if (side[adj[a]] > 0) return Cut{};
    mirror.resize(adj.size());
    for (std::uint32_t i = 0; i < k; ++i)
      for (std::uint32_t a = first[i]; a < first[i + 1]; ++a) {
        std::uint32_t j = adj[a];
        auto it = std::lower_bound(adj.begin() + first[j], adj.begin() + first[j + 1], i);
        mirror[a] = static_cast<std::uint32_t>(it - adj.begin());
      }
    // Flow on out(i) -> in(j) per adjacency entry (i, j), and through each vertex.
    std::vector<std::uint32_t> carried(adj.size(), 0);
    std::vector<std::uint8_t> through(k, 0);
    // Nodes: 2i = in(i), 2i+1 = out(i).
    std::vector<std::uint32_t> parent(2 * k), parent_arc(2 * k);
    std::vector<std::uint32_t> seen(2 * k, 0);
    std::uint32_t round = 0;
    std::vector<std::uint32_t> queue;
    queue.reserve(2 * k);

    auto search = [&]() -> std::uint32_t {
      ++round;
      queue.clear();
      for (std::uint32_t i = 0; i < k; ++i)
        if (side[i] < 0) {
          for (std::uint32_t node : {2 * i, 2 * i + 1}) {
            seen[node] = round;
            parent[node] = kInvalidId;
            queue.push_back(node);
          }
        }
      auto visit = [&](std::uint32_t node, std::uint32_t from, std::uint32_t arc) -> bool {
        if (seen[node] == round) return false;
        seen[node] = round;
        parent[node] = from;
        parent_arc[node] = arc;
        queue.push_back(node);
        return side[node / 2] > 0;
      };
      for (std::size_t q = 0; q < queue.size(); ++q) {
        const std::uint32_t node = queue[q];
        const std::uint32_t i = node / 2;
        if ((node & 1) == 0) {
          if (through[i] == 0 && visit(node + 1, node, kInvalidId)) return node + 1;
          // Backward along out(j) -> in(i) carrying flow j -> i.
          for (std::uint32_t a = first[i]; a < first[i + 1]; ++a)
            if (carried[mirror[a]] > 0 && visit(2 * adj[a] + 1, node, a)) return 2 * adj[a] + 1;
        } else {
          if (through[i] > 0 && visit(node - 1, node, kInvalidId)) return node - 1;
          for (std::uint32_t a = first[i]; a < first[i + 1]; ++a)
            if (visit(2 * adj[a], node, a)) return 2 * adj[a];
        }
      }
      return kInvalidId;
    };

    for (;;) {
      std::uint32_t node = search();
      if (node == kInvalidId) break;
      while (parent[node] != kInvalidId) {
        std::uint32_t from = parent[node];
        if (from / 2 == node / 2) {
          if (side[node / 2] == 0) through[node / 2] = (node & 1) ? 1 : 0;
        } else {
          std::uint32_t a = parent_arc[node];
          if (from & 1)
            ++carried[a];
          else
            --carried[mirror[a]];
        }
        node = from;
      }
    }

    Cut cut;
    for (std::uint32_t i = 0; i < k; ++i) {
      bool in_reached = seen[2 * i] == round, out_reached = seen[2 * i + 1] == round;
      if (out_reached)
        cut.lower.push_back(comp[i]);
      else if (in_reached)
        cut.separator.push_back(comp[i]);
      else
        cut.upper.push_back(comp[i]);
    }
    cut.valid = !cut.separator.empty() && !cut.lower.empty() && !cut.upper.empty();
    return cut;
  }

  void dissect(std::vector<Vertex> comp, std::vector<std::vector<Vertex>>& stack) {
    if (comp.size() <= kLeafSize) {
      assign(comp);
      return;
    }
    // components() left member_ marking the enclosing part; remark the
    // component alone.
    ++stamp_;
    for (std::uint32_t i = 0; i < comp.size(); ++i) {
      member_[comp[i]] = stamp_;
      local_[comp[i]] = i;
    }
    std::vector<Vertex> sweep = bfs(comp.front(), comp.size());
    const Vertex a = sweep.back();
    auto da = distances(a, comp);
    const Vertex b = comp[std::max_element(da.begin(), da.end()) - da.begin()];
    auto db = distances(b, comp);
    std::size_t c_index = 0;
    for (std::size_t i = 0; i < comp.size(); ++i)
      if (std::min(da[i], db[i]) > std::min(da[c_index], db[c_index])) c_index = i;
    auto dc = distances(comp[c_index], comp);
    const Vertex d = comp[std::max_element(dc.begin(), dc.end()) - dc.begin()];
    auto dd = distances(d, comp);

    Cut best;
    auto consider = [&](const std::vector<std::uint32_t>& x, const std::vector<std::uint32_t>& y) {
      std::vector<std::int64_t> key(comp.size());
      for (std::size_t i = 0; i < comp.size(); ++i) key[i] = std::int64_t{x[i]} - std::int64_t{y[i]};
      Cut cut = flow_cut(comp, key);
      // Separator size per vertex of the smaller side, compared exactly.
      auto smaller = [](const Cut& c) { return std::min(c.lower.size(), c.upper.size()); };
      if (cut.valid && (!best.valid || cut.separator.size() * smaller(best) < best.separator.size() * smaller(cut)))
        best = std::move(cut);
    };
    consider(da, db);
    if (comp.size() > kSmallComponent) {
      consider(dc, dd);
      consider(da, dc);
      consider(da, dd);
    }
    if (!best.valid) {
      assign(comp);
      return;
    }
    std::sort(best.separator.begin(), best.separator.end());
    assign(best.separator);
    if (!best.lower.empty()) stack.push_back(std::move(best.lower));
    if (!best.upper.empty()) stack.push_back(std::move(best.upper));
  }

  std::vector<std::vector<Vertex>> nb_;
  Vertex n_;
  std::vector<Vertex> rank_;
  std::vector<std::uint32_t> member_, seen_, level_, local_, visited_;
  std::uint32_t stamp_ = 0, visit_ = 0;
  Vertex next_rank_;
};

}  // namespace

NodeOrder compute_order(const Graph& g) { return NodeOrder::from_ranks(Dissector(g).run()); }

void save_order(const std::filesystem::path& file, const NodeOrder& order) { save_vector(file, order.rank); }

NodeOrder load_order(const std::filesystem::path& file) {
  return NodeOrder::from_ranks(load_vector<Vertex>(file));
}

CchTopology CchTopology::contract(const Graph& g, NodeOrder order) {
  const Vertex n = g.num_vertices();
  if (order.size() != n) throw GraphError("order size does not match the graph");
  auto nb = undirected_neighbors(g);
  std::vector<std::vector<Vertex>> up(n);
  for (Vertex v = 0; v < n; ++v)
    for (Vertex w : nb[v])
      if (order.rank[w] > order.rank[v]) up[order.rank[v]].push_back(order.rank[w]);
  nb.clear();
  nb.shrink_to_fit();

  // Eliminating x connects its upper neighbors pairwise; pushing them into the
  // lowest upper neighbor suffices, the rest follows transitively.
  for (Vertex x = 0; x < n; ++x) {
    auto& list = up[x];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    if (list.size() > 1) {
      auto& parent = up[list.front()];
      parent.insert(parent.end(), list.begin() + 1, list.end());
    }
  }

  CchTopology topo;
  topo.order_ = std::move(order);
  topo.up_first_out_.assign(n + 1, 0);
  for (Vertex x = 0; x < n; ++x) topo.up_first_out_[x + 1] = topo.up_first_out_[x] + static_cast<EdgeId>(up[x].size());
  topo.up_head_.reserve(topo.up_first_out_[n]);
  topo.tail_.reserve(topo.up_first_out_[n]);
  for (Vertex x = 0; x < n; ++x) {
    topo.up_head_.insert(topo.up_head_.end(), up[x].begin(), up[x].end());
    topo.tail_.insert(topo.tail_.end(), up[x].size(), x);
    std::vector<Vertex>().swap(up[x]);
  }
  topo.build_input_mapping(g);
  return topo;
}

void CchTopology::build_input_mapping(const Graph& g) {
  input_up_.assign(num_edges(), kInvalidId);
  input_down_.assign(num_edges(), kInvalidId);
  for (Vertex a = 0; a < g.num_vertices(); ++a) {
    for (EdgeId e = g.begin(a); e < g.end(a); ++e) {
      Vertex ra = rank(a), rb = rank(g.head(e));
      if (ra == rb) continue;
      EdgeId aug = find_edge(ra, rb);
      if (aug == kInvalidId) throw GraphError("augmented graph misses an input edge");
      (ra < rb ? input_up_ : input_down_)[aug] = e;
    }
  }
}

EdgeId CchTopology::find_edge(Vertex x, Vertex y) const {
  if (x > y) std::swap(x, y);
  auto first = up_head_.begin() + up_first_out_[x];
  auto last = up_head_.begin() + up_first_out_[x + 1];
  auto it = std::lower_bound(first, last, y);
  return it != last && *it == y ? static_cast<EdgeId>(it - up_head_.begin()) : kInvalidId;
}

std::uint64_t CchTopology::count_triangles() const {
  std::uint64_t count = 0;
  for_each_lower_triangle([&](EdgeId, EdgeId, EdgeId) { ++count; });
  return count;
}

void CchTopology::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_vector(dir / "cch_first_out", up_first_out_);
  save_vector(dir / "cch_head", up_head_);
}

CchTopology CchTopology::load(const std::filesystem::path& dir, const Graph& g, NodeOrder order) {
  CchTopology topo;
  topo.order_ = std::move(order);
  topo.up_first_out_ = load_vector<EdgeId>(dir / "cch_first_out");
  topo.up_head_ = load_vector<Vertex>(dir / "cch_head");
  if (topo.up_first_out_.size() != g.num_vertices() + std::size_t{1} || topo.up_first_out_.back() != topo.up_head_.size())
    throw IoError("augmented topology does not match the graph");
  topo.tail_.resize(topo.up_head_.size());
  for (Vertex x = 0; x < topo.num_vertices(); ++x)
    for (EdgeId e = topo.up_begin(x); e < topo.up_end(x); ++e) topo.tail_[e] = x;
  topo.build_input_mapping(g);
  return topo;
}

Metric initial_metric(const CchTopology& topo, std::span<const Weight> input_weights) {
  const EdgeId m = topo.num_edges();
  Metric metric{std::vector<Weight>(m, kInfWeight), std::vector<Weight>(m, kInfWeight), {}, {}};
  for (EdgeId e = 0; e < m; ++e) {
    if (topo.input_up(e) != kInvalidId) metric.up[e] = input_weights[topo.input_up(e)];
    if (topo.input_down(e) != kInvalidId) metric.down[e] = input_weights[topo.input_down(e)];
  }
  return metric;
}

void customize_in_place(const CchTopology& topo, Metric& metric, bool track_middle) {
  auto& up = metric.up;
  auto& down = metric.down;
  if (track_middle) {
    metric.up_middle.assign(topo.num_edges(), kInvalidId);
    metric.down_middle.assign(topo.num_edges(), kInvalidId);
    topo.for_each_lower_triangle([&](EdgeId e_xu, EdgeId e_xv, EdgeId e_uv) {
      Vertex x = topo.lower(e_xu);
      Weight via = sat_add(down[e_xu], up[e_xv]);
      if (via < up[e_uv]) {
        up[e_uv] = via;
        metric.up_middle[e_uv] = x;
      }
      via = sat_add(down[e_xv], up[e_xu]);
      if (via < down[e_uv]) {
        down[e_uv] = via;
        metric.down_middle[e_uv] = x;
      }
    });
    return;
  }
  topo.for_each_lower_triangle([&](EdgeId e_xu, EdgeId e_xv, EdgeId e_uv) {
    up[e_uv] = std::min(up[e_uv], sat_add(down[e_xu], up[e_xv]));
    down[e_uv] = std::min(down[e_uv], sat_add(down[e_xv], up[e_xu]));
  });
}

Metric basic_customize(const CchTopology& topo, std::span<const Weight> input_weights, bool track_middle) {
  Metric metric = initial_metric(topo, input_weights);
  customize_in_place(topo, metric, track_middle);
  return metric;
}

PerfectMetric perfect_customize(const CchTopology& topo, const Metric& basic) {
  PerfectMetric result;
  result.weights.up = basic.up;
  result.weights.down = basic.down;
  auto& up = result.weights.up;
  auto& down = result.weights.down;
  const Vertex n = topo.num_vertices();
  std::vector<EdgeId> mark(n, kInvalidId);
  for (Vertex x = n; x-- > 0;) {
    for (EdgeId e = topo.up_begin(x); e < topo.up_end(x); ++e) mark[topo.up_head(e)] = e;
    for (EdgeId e_xy = topo.up_begin(x); e_xy < topo.up_end(x); ++e_xy) {
      Vertex y = topo.up_head(e_xy);
      for (EdgeId e_yz = topo.up_begin(y); e_yz < topo.up_end(y); ++e_yz) {
        EdgeId e_xz = mark[topo.up_head(e_yz)];
        if (e_xz == kInvalidId) continue;
        // x < y < z: {y, z} is final. Upper triangle for {x, y} ...
        up[e_xy] = std::min(up[e_xy], sat_add(up[e_xz], down[e_yz]));
        down[e_xy] = std::min(down[e_xy], sat_add(up[e_yz], down[e_xz]));
        // ... and intermediate triangle for {x, z}.
        up[e_xz] = std::min(up[e_xz], sat_add(up[e_xy], up[e_yz]));
        down[e_xz] = std::min(down[e_xz], sat_add(down[e_yz], down[e_xy]));
      }
    }
    for (EdgeId e = topo.up_begin(x); e < topo.up_end(x); ++e) mark[topo.up_head(e)] = kInvalidId;
  }
  const EdgeId m = topo.num_edges();
  result.up_alive.resize(m);
  result.down_alive.resize(m);
  for (EdgeId e = 0; e < m; ++e) {
    result.up_alive[e] = basic.up[e] == up[e] && up[e] != kInfWeight;
    result.down_alive[e] = basic.down[e] == down[e] && down[e] != kInfWeight;
  }
  return result;
}

namespace {

ArcSet filter_arcs(const CchTopology& topo, std::span<const std::uint8_t> alive) {
  ArcSet arcs;
  const Vertex n = topo.num_vertices();
  arcs.first_out.assign(n + 1, 0);
  for (Vertex x = 0; x < n; ++x) {
    for (EdgeId e = topo.up_begin(x); e < topo.up_end(x); ++e) {
      if (!alive.empty() && !alive[e]) continue;
      arcs.head.push_back(topo.up_head(e));
      arcs.edge.push_back(e);
    }
    arcs.first_out[x + 1] = static_cast<EdgeId>(arcs.head.size());
  }
  return arcs;
}

}  // namespace

SearchTopology SearchTopology::full(const CchTopology& topo) {
  ArcSet all = filter_arcs(topo, {});
  return {all, all};
}

SearchTopology SearchTopology::reduced(const CchTopology& topo, std::span<const std::uint8_t> up_alive,
                                       std::span<const std::uint8_t> down_alive) {
  return {filter_arcs(topo, up_alive), filter_arcs(topo, down_alive)};
}

ChQuery::ChQuery(const CchTopology& topo, const SearchTopology& search)
    : topo_(&topo),
      search_(&search),
      fwd_(topo.num_vertices(), kInfinity),
      bwd_(topo.num_vertices(), kInfinity),
      fwd_pred_(topo.num_vertices(), kInvalidId),
      bwd_pred_(topo.num_vertices(), kInvalidId),
      fwd_heap_(topo.num_vertices()),
      bwd_heap_(topo.num_vertices()) {}

Duration ChQuery::run(const Metric& metric, Vertex s, Vertex t) {
  fwd_.reset();
  bwd_.reset();
  fwd_pred_.reset();
  bwd_pred_.reset();
  fwd_heap_.clear();
  bwd_heap_.clear();
  s_ = topo_->rank(s);
  t_ = topo_->rank(t);
  meet_ = kInvalidId;
  search_space_ = 0;
  fwd_.set(s_, 0);
  bwd_.set(t_, 0);
  fwd_heap_.push(s_, 0);
  bwd_heap_.push(t_, 0);
  Duration best = kInfinity;
  if (s_ == t_) {
    meet_ = s_;
    return 0;
  }

  auto step = [&](QuaternaryHeap& heap, TimestampedArray<Duration>& dist, TimestampedArray<Vertex>& pred,
                  const TimestampedArray<Duration>& other, const ArcSet& arcs, const std::vector<Weight>& weights) {
    auto [x, dx] = heap.pop();
    ++search_space_;
    if (other[x] < kInfinity && dx + other[x] < best) {
      best = dx + other[x];
      meet_ = x;
    }
    for (EdgeId a = arcs.begin(x); a < arcs.end(x); ++a) {
      Weight w = weights[arcs.edge[a]];
      if (w == kInfWeight) continue;
      Vertex y = arcs.head[a];
      Duration dy = dx + w;
      if (dy < dist[y]) {
        dist.set(y, dy);
        pred.set(y, x);
        heap.push_or_decrease(y, dy);
      }
    }
  };

  bool forward_turn = true;
  for (;;) {
    bool fwd_open = !fwd_heap_.empty() && fwd_heap_.top().second < best;
    bool bwd_open = !bwd_heap_.empty() && bwd_heap_.top().second < best;
    if (!fwd_open && !bwd_open) break;
    if ((forward_turn && fwd_open) || !bwd_open)
      step(fwd_heap_, fwd_, fwd_pred_, bwd_, search_->forward, metric.up);
    else
      step(bwd_heap_, bwd_, bwd_pred_, fwd_, search_->backward, metric.down);
    forward_turn = !forward_turn;
  }
  return best;
}

void ChQuery::unpack(const Metric& metric, Vertex from, Vertex to, std::vector<Vertex>& out) const {
  EdgeId e = topo_->find_edge(from, to);
  Vertex middle = from < to ? metric.up_middle[e] : metric.down_middle[e];
  if (middle == kInvalidId) {
    out.push_back(topo_->vertex(to));
    return;
  }
  unpack(metric, from, middle, out);
  unpack(metric, middle, to, out);
}

std::vector<Vertex> ChQuery::path(const Metric& metric) const {
  if (meet_ == kInvalidId) return {};
  if (metric.up_middle.empty()) throw std::logic_error("path unpacking needs middle vertices");
  std::vector<Vertex> up_part;
  for (Vertex x = meet_; x != s_; x = fwd_pred_[x]) up_part.push_back(x);
  up_part.push_back(s_);
  std::reverse(up_part.begin(), up_part.end());
  std::vector<Vertex> out{topo_->vertex(s_)};
  for (std::size_t i = 0; i + 1 < up_part.size(); ++i) unpack(metric, up_part[i], up_part[i + 1], out);
  for (Vertex x = meet_; x != t_; x = bwd_pred_[x]) unpack(metric, x, bwd_pred_[x], out);
  return out;
}

Duration ch_query(const CchTopology& topo, const Metric& metric, Vertex s, Vertex t) {
  SearchTopology search = SearchTopology::full(topo);
  ChQuery query(topo, search);
  return query.run(metric, s, t);
}

}  // namespace tdpot
