#include "tdpot/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "tdpot/lazy_rphast.hpp"

namespace tdpot {

namespace {

constexpr Duration kHourMs = 3'600'000;

struct KindName {
  QueryKind kind;
  const char* name;
};
constexpr KindName kKinds[] = {{QueryKind::random, "random"}, {QueryKind::one_hour, "1h"}, {QueryKind::rank, "rank"}};

struct AlgoName {
  Algorithm algo;
  const char* name;
};
constexpr AlgoName kAlgos[] = {{Algorithm::dijkstra, "dijkstra"},
                               {Algorithm::cch_pot, "cchpot"},
                               {Algorithm::mmp, "mmp"},
                               {Algorithm::imp, "imp"}};

// Streams for CounterRng so the three kinds never share draws.
constexpr std::uint64_t kStreamQueries = 0x51;

}  // namespace

std::string to_string(QueryKind kind) {
  for (auto [k, name] : kKinds)
    if (k == kind) return name;
  return "?";
}

std::string to_string(Algorithm algo) {
  for (auto [a, name] : kAlgos)
    if (a == algo) return name;
  return "?";
}

QueryKind parse_query_kind(const std::string& text) {
  for (auto [k, name] : kKinds)
    if (text == name) return k;
  if (text == "one-hour") return QueryKind::one_hour;
  throw std::invalid_argument("unknown query kind: " + text);
}

Algorithm parse_algorithm(const std::string& text) {
  for (auto [a, name] : kAlgos)
    if (text == name) return a;
  if (text == "cch-pot") return Algorithm::cch_pot;
  throw std::invalid_argument("unknown algorithm: " + text);
}

std::vector<Query> gen_queries(const Graph& g, const CombinedWeights& weights, const QuerySpec& spec,
                               QueryGenStats* stats) {
  const Vertex n = g.num_vertices();
  if (n == 0) throw std::invalid_argument("gen_queries: empty graph");
  std::vector<Query> queries;
  TdDijkstra dijkstra(g);
  QueryGenStats local;

  auto departure = [&](CounterRng& rng) {
    return spec.spread > 0 ? spec.departure + rng.range(0, spec.spread) : spec.departure;
  };

  switch (spec.kind) {
    case QueryKind::random:
      for (std::size_t i = 0; i < spec.count; ++i) {
        CounterRng rng(spec.seed, kStreamQueries, i);
        Query q;
        q.source = static_cast<Vertex>(rng.range(0, n - 1));
        q.target = static_cast<Vertex>(rng.range(0, n - 1));
        q.departure = departure(rng);
        queries.push_back(q);
      }
      break;
    case QueryKind::one_hour: {
      // Attempts are numbered globally so a resample draws fresh values.
      std::size_t attempt = 0;
      const std::size_t max_attempts = spec.count * 64 + 1024;
      while (queries.size() < spec.count) {
        if (attempt >= max_attempts)
          throw std::runtime_error("gen_queries: too few sources reach beyond one hour");
        CounterRng rng(spec.seed, kStreamQueries + 1, attempt++);
        Query q;
        q.source = static_cast<Vertex>(rng.range(0, n - 1));
        q.departure = departure(rng);
        q.target = kInvalidId;
        dijkstra.run_until(weights, q.source, q.departure, [&](Vertex v, Timestamp at) {
          if (at - q.departure > spec.one_hour) {
            q.target = v;
            return false;
          }
          return true;
        });
        if (q.target == kInvalidId) {
          ++local.resampled;
          continue;
        }
        queries.push_back(q);
      }
      break;
    }
    case QueryKind::rank:
      for (std::size_t i = 0; i < spec.count; ++i) {
        CounterRng rng(spec.seed, kStreamQueries + 2, i);
        const Vertex s = static_cast<Vertex>(rng.range(0, n - 1));
        const Timestamp dep = departure(rng);
        std::uint64_t position = 0, next_rank = 2;
        dijkstra.run_until(weights, s, dep, [&](Vertex v, Timestamp) {
          if (++position == next_rank) {
            queries.push_back({s, v, dep, static_cast<std::uint32_t>(next_rank)});
            next_rank *= 2;
          }
          return true;
        });
      }
      break;
  }
  if (stats) *stats = local;
  return queries;
}

void write_queries(const std::filesystem::path& file, const std::vector<Query>& queries) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "# source target departure_ms rank\n";
  for (const Query& q : queries) out << q.source << ' ' << q.target << ' ' << q.departure << ' ' << q.rank << '\n';
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

std::vector<Query> read_queries(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::vector<Query> queries;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    Query q;
    if (!(fields >> q.source >> q.target >> q.departure >> q.rank))
      throw std::runtime_error(file.string() + ":" + std::to_string(number) + ": malformed query");
    queries.push_back(q);
  }
  return queries;
}

namespace {

void require_phases(const SuiteContext& ctx, const RunOptions& options) {
  if (!ctx.graph || !ctx.predicted || !ctx.overlay) throw PhaseError("instance not loaded");
  for (Algorithm a : options.algorithms) {
    switch (a) {
      case Algorithm::dijkstra:
        break;
      case Algorithm::cch_pot:
        if (!ctx.topo || !ctx.cch_metric || !ctx.cch_search) throw PhaseError("cchpot needs preprocessing");
        break;
      case Algorithm::mmp:
        if (!ctx.topo || !ctx.mmp) throw PhaseError("mmp needs preprocessing");
        if (!ctx.mmp_update || ctx.mmp_update->tau_now != ctx.overlay->tau_now())
          throw PhaseError("mmp queried before the update for the current snapshot");
        break;
      case Algorithm::imp:
        if (!ctx.topo || !ctx.imp) throw PhaseError("imp needs preprocessing");
        if (!ctx.imp_update || ctx.imp_update->tau_now != ctx.overlay->tau_now())
          throw PhaseError("imp queried before the update for the current snapshot");
        break;
    }
  }
}

// Search state for one thread.
struct Worker {
  const SuiteContext& ctx;
  const RunOptions& options;
  CombinedWeights weights;
  TdDijkstra dijkstra;
  TdAstar astar;
  std::unique_ptr<CchPotential> cch;
  std::unique_ptr<MmpPotential> mmp;
  std::unique_ptr<ImpPotential> imp;

  Worker(const SuiteContext& c, const RunOptions& o)
      : ctx(c), options(o), weights(*c.predicted, c.overlay), dijkstra(*c.graph), astar(*c.graph) {
    for (Algorithm a : o.algorithms) {
      if (a == Algorithm::cch_pot && !cch) cch = std::make_unique<CchPotential>(*c.topo, *c.cch_search, *c.cch_metric);
      if (a == Algorithm::mmp && !mmp)
        mmp = std::make_unique<MmpPotential>(*c.topo, *c.mmp, *c.mmp_update, MmpOptions{o.metric_switching});
      if (a == Algorithm::imp && !imp) imp = std::make_unique<ImpPotential>(*c.topo, *c.imp, *c.imp_update);
    }
  }

  SearchResult run(Algorithm a, const Query& q) {
    switch (a) {
      case Algorithm::dijkstra:
        return dijkstra.run(weights, q.source, q.target, q.departure);
      case Algorithm::cch_pot:
        return astar.run(weights, *cch, q.source, q.target, q.departure, options.astar);
      case Algorithm::mmp:
        return astar.run(weights, *mmp, q.source, q.target, q.departure, options.astar);
      case Algorithm::imp:
        return astar.run(weights, *imp, q.source, q.target, q.departure, options.astar);
    }
    return {};
  }

  void process(const std::vector<Query>& queries, std::size_t begin, std::size_t end, RunReport& report) {
    const std::size_t algos = options.algorithms.size();
    for (std::size_t i = begin; i < end; ++i) {
      const Query& q = queries[i];
      Duration reference = kInfinity;
      bool have_reference = false;
      for (std::size_t j = 0; j < algos; ++j) {
        const Algorithm a = options.algorithms[j];
        auto start = std::chrono::steady_clock::now();
        SearchResult r = run(a, q);
        auto stop = std::chrono::steady_clock::now();
        QueryRecord& rec = report.records[i * algos + j];
        rec = {i, a, r.distance, r.pops, r.resettles,
               std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count()};
        if (a == Algorithm::dijkstra) {
          reference = r.distance;
          have_reference = true;
        }
      }
      if (!have_reference)
        reference = options.reference.empty() ? dijkstra.run(weights, q.source, q.target, q.departure).distance
                                               : options.reference[i];
      report.reference[i] = reference;
    }
  }
};

}  // namespace

RunReport run_suite(const SuiteContext& ctx, const std::vector<Query>& queries, const RunOptions& options) {
  require_phases(ctx, options);
  if (options.algorithms.empty()) throw std::invalid_argument("run_suite: no algorithms");
  if (!options.reference.empty() && options.reference.size() != queries.size())
    throw std::invalid_argument("run_suite: reference size differs from the query count");
  RunReport report;
  report.queries = queries;
  report.algorithms = options.algorithms;
  report.records.resize(queries.size() * options.algorithms.size());
  report.reference.resize(queries.size());

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(queries.size())));
  if (threads <= 1) {
    Worker worker(ctx, options);
    worker.process(queries, 0, queries.size(), report);
  } else {
    std::vector<std::thread> pool;
    const std::size_t per = (queries.size() + threads - 1) / threads;
    for (unsigned k = 0; k < threads; ++k) {
      const std::size_t b = k * per, e = std::min(queries.size(), b + per);
      if (b >= e) break;
      pool.emplace_back([&, b, e] {
        Worker worker(ctx, options);
        worker.process(queries, b, e, report);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (const QueryRecord& rec : report.records)
    if (rec.distance != report.reference[rec.query]) ++report.mismatches;
  return report;
}

std::vector<AlgorithmSummary> RunReport::summary() const {
  std::vector<AlgorithmSummary> out;
  const std::size_t algos = algorithms.size();
  const std::size_t q = queries.size();
  for (std::size_t j = 0; j < algos; ++j) {
    AlgorithmSummary s{algorithms[j]};
    for (std::size_t i = 0; i < q; ++i) {
      const QueryRecord& r = records[i * algos + j];
      s.mean_time_ns += static_cast<double>(r.time_ns);
      s.mean_pops += static_cast<double>(r.pops);
      s.mean_resettles += static_cast<double>(r.resettles);
      if (r.distance != reference[i]) ++s.mismatches;
    }
    if (q > 0) {
      s.mean_time_ns /= static_cast<double>(q);
      s.mean_pops /= static_cast<double>(q);
      s.mean_resettles /= static_cast<double>(q);
    }
    out.push_back(s);
  }
  double dijkstra_time = 0;
  bool have = false;
  for (const auto& s : out)
    if (s.algorithm == Algorithm::dijkstra) {
      dijkstra_time = s.mean_time_ns;
      have = true;
    }
  for (auto& s : out) {
    if (s.algorithm == Algorithm::dijkstra)
      s.speedup = 1.0;
    else
      s.speedup = have && s.mean_time_ns > 0 ? dijkstra_time / s.mean_time_ns : 0.0;
  }
  return out;
}

namespace {

std::string distance_text(Duration d) { return d >= kInfinity ? std::string("inf") : std::to_string(d); }

}  // namespace

void write_report_csv(std::ostream& out, const RunReport& report) {
  out << kReportSchema << '\n';
  out << "query,source,target,departure_ms,rank,algorithm,distance_ms,reference_ms,pops,resettles,time_ns\n";
  for (const QueryRecord& r : report.records) {
    const Query& q = report.queries[r.query];
    out << r.query << ',' << q.source << ',' << q.target << ',' << q.departure << ',' << q.rank << ','
        << to_string(r.algorithm) << ',' << distance_text(r.distance) << ',' << distance_text(report.reference[r.query])
        << ',' << r.pops << ',' << r.resettles << ',' << r.time_ns << '\n';
  }
}

void write_summary_csv(std::ostream& out, const RunReport& report, bool by_hour) {
  out << kReportSchema << '\n';
  out << "group,algorithm,queries,mean_time_ns,mean_pops,mean_resettles,speedup,mismatches\n";
  auto emit = [&](const std::string& group, const RunReport& part) {
    for (const auto& s : part.summary())
      out << group << ',' << to_string(s.algorithm) << ',' << part.queries.size() << ',' << s.mean_time_ns << ','
          << s.mean_pops << ',' << s.mean_resettles << ',' << s.speedup << ',' << s.mismatches << '\n';
  };
  emit("all", report);
  if (!by_hour) return;

  // Hour of day of the departure, 0..23.
  std::map<int, RunReport> hours;
  const std::size_t algos = report.algorithms.size();
  for (std::size_t i = 0; i < report.queries.size(); ++i) {
    const Timestamp day_ms = ((report.queries[i].departure % 86'400'000) + 86'400'000) % 86'400'000;
    RunReport& part = hours[static_cast<int>(day_ms / kHourMs)];
    part.algorithms = report.algorithms;
    const std::size_t local = part.queries.size();
    part.queries.push_back(report.queries[i]);
    part.reference.push_back(report.reference[i]);
    for (std::size_t j = 0; j < algos; ++j) {
      QueryRecord r = report.records[i * algos + j];
      r.query = local;
      part.records.push_back(r);
    }
  }
  for (auto& [hour, part] : hours) emit("hour" + std::to_string(hour), part);
}

bool dump_counterexample(const std::filesystem::path& dir, const SuiteContext& ctx, const RunReport& report) {
  const QueryRecord* bad = nullptr;
  for (const QueryRecord& r : report.records)
    if (r.distance != report.reference[r.query]) {
      bad = &r;
      break;
    }
  if (!bad) return false;
  const Query& q = report.queries[bad->query];
  const Graph& g = *ctx.graph;
  CombinedWeights weights(*ctx.predicted, ctx.overlay);

  // Vertices settled by the reference search up to the target, plus the
  // heads of their edges so every arc of the slice has both ends.
  std::vector<Vertex> local(g.num_vertices(), kInvalidId);
  std::vector<Vertex> original;
  auto add = [&](Vertex v) {
    if (local[v] == kInvalidId) {
      local[v] = static_cast<Vertex>(original.size());
      original.push_back(v);
    }
  };
  TdDijkstra dijkstra(g);
  std::vector<Vertex> settled;
  dijkstra.run_until(weights, q.source, q.departure, [&](Vertex v, Timestamp) {
    settled.push_back(v);
    return v != q.target;
  });
  for (Vertex v : settled) add(v);
  for (Vertex v : settled)
    for (EdgeId e = g.begin(v); e < g.end(v); ++e) add(g.head(e));

  std::vector<std::pair<Vertex, Vertex>> arcs;
  std::vector<EdgeId> arc_edge;
  for (Vertex v : settled)
    for (EdgeId e = g.begin(v); e < g.end(v); ++e) {
      arcs.emplace_back(local[v], local[g.head(e)]);
      arc_edge.push_back(e);
    }
  // from_arcs sorts by tail; keep the edge mapping in the same order.
  std::vector<std::size_t> order(arcs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return arcs[a] < arcs[b]; });
  std::vector<std::pair<Vertex, Vertex>> sorted_arcs;
  std::vector<EdgeId> sorted_edge;
  for (std::size_t i : order) {
    sorted_arcs.push_back(arcs[i]);
    sorted_edge.push_back(arc_edge[i]);
  }
  Graph slice = Graph::from_arcs(static_cast<Vertex>(original.size()), sorted_arcs);

  std::vector<std::uint32_t> first_bp{0}, dep, travel;
  std::vector<LiveEntry> live;
  for (std::size_t i = 0; i < sorted_edge.size(); ++i) {
    const EdgeId e = sorted_edge[i];
    TtfView f = ctx.predicted->function(e);
    dep.insert(dep.end(), f.departure.begin(), f.departure.end());
    travel.insert(travel.end(), f.travel.begin(), f.travel.end());
    first_bp.push_back(static_cast<std::uint32_t>(dep.size()));
    if (ctx.overlay->has_entry(e))
      live.push_back({static_cast<EdgeId>(i), ctx.overlay->live(e), ctx.overlay->end(e)});
  }

  std::filesystem::create_directories(dir / "graph");
  std::filesystem::create_directories(dir / "ttf");
  save_graph(dir / "graph", slice);
  save_ttfs(dir / "ttf", TravelTimeFunctions(std::move(first_bp), std::move(dep), std::move(travel)));
  write_snapshot(dir / "live.txt", LiveSnapshot{ctx.overlay->tau_now(), live});

  std::ofstream info(dir / "query.txt");
  info << "# counterexample: original ids, slice ids, departure, algorithm, distances\n";
  info << "source " << q.source << " slice " << local[q.source] << '\n';
  info << "target " << q.target << " slice " << local[q.target] << '\n';
  info << "departure_ms " << q.departure << '\n';
  info << "algorithm " << to_string(bad->algorithm) << '\n';
  info << "distance_ms " << distance_text(bad->distance) << '\n';
  info << "reference_ms " << distance_text(report.reference[bad->query]) << '\n';
  std::ofstream map(dir / "vertex_map.txt");
  for (Vertex v : original) map << v << '\n';
  return true;
}

}  // namespace tdpot
