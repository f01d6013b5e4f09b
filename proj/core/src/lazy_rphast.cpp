#include "tdpot/lazy_rphast.hpp"

namespace tdpot {

LazyRphast::LazyRphast(const CchTopology& topo, const SearchTopology& search)
    : topo_(&topo),
      search_(&search),
      down_(topo.num_vertices(), kInfinity),
      memo_(topo.num_vertices(), kInfinity),
      heap_(topo.num_vertices()) {}

void LazyRphast::init(const Metric& metric, Vertex t) {
  metric_ = &metric;
  down_.reset();
  memo_.reset();
  heap_.clear();
  search_space_ = 0;
  relaxed_ = 0;
  const Vertex rt = topo_->rank(t);
  const ArcSet& arcs = search_->backward;
  down_.set(rt, 0);
  heap_.push(rt, 0);
  while (!heap_.empty()) {
    auto [x, dx] = heap_.pop();
    ++search_space_;
    for (EdgeId a = arcs.begin(x); a < arcs.end(x); ++a) {
      Weight w = metric.down[arcs.edge[a]];
      if (w == kInfWeight) continue;
      Vertex y = arcs.head[a];
      Duration dy = dx + w;
      if (dy < down_[y]) {
        down_.set(y, dy);
        heap_.push_or_decrease(y, dy);
      }
    }
  }
}

Duration LazyRphast::distance(Vertex u) {
  const Vertex ru = topo_->rank(u);
  if (memo_.is_set(ru)) return memo_[ru];
  const ArcSet& arcs = search_->forward;
  const auto& up = metric_->up;
  stack_.clear();
  stack_.push_back({ru, arcs.begin(ru), down_[ru]});
  while (!stack_.empty()) {
    Frame& f = stack_.back();
    if (f.next == arcs.end(f.x)) {
      const Vertex x = f.x;
      const Duration best = f.best;
      memo_.set(x, best);
      stack_.pop_back();
      if (!stack_.empty()) {
        Frame& parent = stack_.back();
        parent.best = std::min(parent.best, sat_add(best, to_duration(up[arcs.edge[parent.next]])));
        ++parent.next;
      }
      continue;
    }
    const EdgeId a = f.next;
    const Weight w = up[arcs.edge[a]];
    if (w == kInfWeight) {
      ++f.next;
      continue;
    }
    ++relaxed_;
    const Vertex y = arcs.head[a];
    if (memo_.is_set(y)) {
      f.best = std::min(f.best, sat_add(memo_[y], Duration{w}));
      ++f.next;
    } else {
      stack_.push_back({y, arcs.begin(y), down_[y]});
    }
  }
  return memo_[ru];
}

}  // namespace tdpot
