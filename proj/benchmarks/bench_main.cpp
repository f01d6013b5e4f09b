#include <benchmark/benchmark.h>

#include <memory>

#include "tdpot/bench.hpp"
#include "tdpot/compression.hpp"
#include "tdpot/lazy_rphast.hpp"

using namespace tdpot;

namespace {

struct Fixture {
  GenConfig cfg;
  Network net;
  TravelTimeFunctions p;
  std::shared_ptr<const LiveOverlay> overlay;
  CchTopology topo;
  Metric lower;
  SearchTopology full;
  MmpPreprocessed mmp;
  MmpUpdate mmp_update;
  ImpPreprocessed imp;
  ImpUpdate imp_update;
  std::vector<Query> queries;

  Fixture() {
    cfg.width = cfg.height = 64;
    cfg.incidents = 100;
    cfg.blocked_fraction = 0.02;
    net = gen_network(cfg);
    p = gen_predictions(cfg, net);
    auto snapshot = gen_live(cfg, net.graph, p);
    overlay = std::make_shared<const LiveOverlay>(p, snapshot.tau_now, snapshot.entries);
    topo = CchTopology::contract(net.graph, compute_order(net.graph));
    lower = basic_customize(topo, p.lower_bounds());
    full = SearchTopology::full(topo);
    mmp = mmp_preprocess(topo, p, IntervalGridConfig{});
    mmp_update = tdpot::mmp_update(topo, mmp, p, *overlay);
    imp = bucket_customize(topo, p);
    imp_update = tdpot::imp_update(topo, imp, p, *overlay);
    QuerySpec spec;
    spec.count = 64;
    spec.departure = overlay->tau_now();
    queries = gen_queries(net.graph, CombinedWeights(p, overlay), spec);
  }

};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_BasicCustomize(benchmark::State& state) {
  const auto& f = fixture();
  auto weights = f.p.lower_bounds();
  for (auto _ : state) benchmark::DoNotOptimize(basic_customize(f.topo, weights));
}
BENCHMARK(BM_BasicCustomize)->Unit(benchmark::kMillisecond);

void BM_PerfectCustomize(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(perfect_customize(f.topo, f.lower));
}
BENCHMARK(BM_PerfectCustomize)->Unit(benchmark::kMillisecond);

void BM_MmpPreprocess(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(mmp_preprocess(f.topo, f.p, IntervalGridConfig{}));
}
BENCHMARK(BM_MmpPreprocess)->Unit(benchmark::kMillisecond)->Iterations(2);

void BM_BucketCustomize(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(bucket_customize(f.topo, f.p));
}
BENCHMARK(BM_BucketCustomize)->Unit(benchmark::kMillisecond)->Iterations(2);

void BM_MmpUpdate(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(mmp_update(f.topo, f.mmp, f.p, *f.overlay));
}
BENCHMARK(BM_MmpUpdate)->Unit(benchmark::kMillisecond);

void BM_CompressProfiles(benchmark::State& state) {
  const auto& f = fixture();
  const auto k = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    state.PauseTiming();
    ImpPreprocessed copy = f.imp;
    state.ResumeTiming();
    benchmark::DoNotOptimize(compress_profiles(copy, k));
  }
}
BENCHMARK(BM_CompressProfiles)->Arg(32)->Arg(16)->Arg(4)->Unit(benchmark::kMillisecond)->Iterations(1);

template <class Run>
void run_queries(benchmark::State& state, const Fixture& f, Run&& run) {
  std::size_t pops = 0;
  for (auto _ : state)
    for (const Query& q : f.queries) {
      SearchResult r = run(q);
      pops += r.pops;
      benchmark::DoNotOptimize(r.distance);
    }
  const auto processed = static_cast<std::int64_t>(state.iterations() * f.queries.size());
  state.SetItemsProcessed(processed);
  state.counters["pops"] = static_cast<double>(pops) / static_cast<double>(processed);
}

void BM_QueryDijkstra(benchmark::State& state) {
  const auto& f = fixture();
  CombinedWeights w(f.p, f.overlay);
  TdDijkstra search(f.net.graph);
  run_queries(state, f, [&](const Query& q) { return search.run(w, q.source, q.target, q.departure); });
}
BENCHMARK(BM_QueryDijkstra)->Unit(benchmark::kMillisecond);

template <class Potential>
void astar_queries(benchmark::State& state, const Fixture& f, Potential& pot) {
  CombinedWeights w(f.p, f.overlay);
  TdAstar search(f.net.graph);
  run_queries(state, f, [&](const Query& q) { return search.run(w, pot, q.source, q.target, q.departure); });
}

void BM_QueryCchPot(benchmark::State& state) {
  const auto& f = fixture();
  CchPotential pot(f.topo, f.full, f.lower);
  astar_queries(state, f, pot);
}
BENCHMARK(BM_QueryCchPot)->Unit(benchmark::kMillisecond);

void BM_QueryMmp(benchmark::State& state) {
  const auto& f = fixture();
  MmpPotential pot(f.topo, f.mmp, f.mmp_update, MmpOptions{state.range(0) != 0});
  astar_queries(state, f, pot);
}
BENCHMARK(BM_QueryMmp)->ArgName("switching")->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_QueryImp(benchmark::State& state) {
  const auto& f = fixture();
  ImpPotential pot(f.topo, f.imp, f.imp_update);
  astar_queries(state, f, pot);
}
BENCHMARK(BM_QueryImp)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
