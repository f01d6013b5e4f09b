#include "pipeline.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "tdpot/lazy_rphast.hpp"

namespace tdpot::pipeline {

using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json read_manifest(const fs::path& dir) {
  const fs::path file = dir / kManifest;
  if (!fs::exists(file)) throw PhaseError(dir.string() + " has no manifest; run generate first");
  return json::parse(read_file(file));
}

void write_manifest(const fs::path& dir, const json& manifest) {
  const fs::path tmp = dir / (std::string(kManifest) + ".tmp");
  {
    std::ofstream out(tmp);
    out << manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, dir / kManifest);
}

void append_phase(const fs::path& dir, json entry) {
  json manifest = read_manifest(dir);
  entry["index"] = manifest["phases"].size();
  manifest["phases"].push_back(std::move(entry));
  write_manifest(dir, manifest);
}

json gen_config_json(const GenConfig& c) {
  return {{"seed", c.seed},
          {"width", c.width},
          {"height", c.height},
          {"spacing_m", c.spacing_m},
          {"length_jitter", c.length_jitter},
          {"local_kmh_min", c.local_kmh_min},
          {"local_kmh_max", c.local_kmh_max},
          {"highway_every", c.highway_every},
          {"highway_span", c.highway_span},
          {"highway_kmh", c.highway_kmh},
          {"diagonal_probability", c.diagonal_probability},
          {"td_fraction", c.td_fraction},
          {"max_breakpoints", c.max_breakpoints},
          {"morning_peak_h", c.morning_peak_h},
          {"evening_peak_h", c.evening_peak_h},
          {"peak_factor_min", c.peak_factor_min},
          {"peak_factor_max", c.peak_factor_max},
          {"incidents", c.incidents},
          {"blocked_fraction", c.blocked_fraction},
          {"tau_now", c.tau_now},
          {"horizon", c.horizon}};
}

json grid_json(const IntervalGridConfig& g) {
  return {{"lengths_min", g.lengths_min},
          {"step_min", g.step_min},
          {"day_begin_min", g.day_begin_min},
          {"day_end_min", g.day_end_min},
          {"live_window_ms", g.live_window}};
}

// Index of the latest phase with one of the names, or -1.
long last_phase(const json& manifest, std::initializer_list<const char*> names) {
  long found = -1;
  for (const auto& p : manifest["phases"])
    for (const char* n : names)
      if (p["phase"] == n) found = p["index"].get<long>();
  return found;
}

const json* last_entry(const json& manifest, std::initializer_list<const char*> names) {
  const long i = last_phase(manifest, names);
  return i < 0 ? nullptr : &manifest["phases"][static_cast<std::size_t>(i)];
}

std::uint32_t profile_functions(const ImpPreprocessed& imp) { return imp.profiles.functions(); }

}  // namespace

std::vector<std::string> phases(const fs::path& dir) {
  const json manifest = read_manifest(dir);
  std::vector<std::string> out;
  for (const auto& p : manifest["phases"]) out.push_back(p["phase"].get<std::string>());
  return out;
}

std::map<std::string, std::string> fingerprint(const fs::path& dir, const std::string& sub) {
  std::map<std::string, std::string> out;
  const fs::path root = dir / sub;
  if (!fs::exists(root)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string content = read_file(entry.path());
    std::ostringstream hash;
    hash << std::hex << std::hash<std::string>{}(content) << ':' << std::dec << content.size();
    out[fs::relative(entry.path(), dir).generic_string()] = hash.str();
  }
  return out;
}

void generate(const fs::path& dir, const GenConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(dir);
  for (const char* sub : {"graph", "ttf", "snapshots", "preprocess", "update"}) fs::remove_all(dir / sub);
  fs::create_directories(dir / "graph");
  fs::create_directories(dir / "ttf");
  fs::create_directories(dir / "snapshots");

  Network net = gen_network(cfg);
  TravelTimeFunctions p = gen_predictions(cfg, net);
  LiveSnapshot snapshot = gen_live(cfg, net.graph, p);
  save_graph(dir / "graph", net.graph);
  save_ttfs(dir / "ttf", p);
  write_snapshot(dir / "snapshots" / "live.txt", snapshot);

  std::size_t td = 0;
  for (EdgeId e = 0; e < p.num_edges(); ++e) td += p.function(e).size() > 1;
  std::size_t blocked = 0;
  for (const auto& e : snapshot.entries) blocked += e.live >= kInfinity;

  json manifest = {{"format", "tdpot-manifest"}, {"version", 1}, {"phases", json::array()}};
  write_manifest(dir, manifest);
  append_phase(dir, {{"phase", "generate"},
                     {"seed", cfg.seed},
                     {"config", gen_config_json(cfg)},
                     {"vertices", net.graph.num_vertices()},
                     {"edges", net.graph.num_edges()},
                     {"time_dependent_edges", td},
                     {"incidents", snapshot.entries.size()},
                     {"blocked", blocked},
                     {"seconds", seconds_since(start)},
                     {"artifacts", json{{"graph", fingerprint(dir, "graph")}, {"ttf", fingerprint(dir, "ttf")}}}});
}

void generate_snapshot(const fs::path& dir, const fs::path& file, const GenConfig& cfg) {
  read_manifest(dir);
  Graph g = load_graph(dir / "graph");
  TravelTimeFunctions p = load_ttfs(dir / "ttf");
  LiveSnapshot snapshot = gen_live(cfg, g, p);
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  write_snapshot(file, snapshot);
  append_phase(dir, {{"phase", "generate-snapshot"},
                     {"seed", cfg.seed},
                     {"file", fs::absolute(file).string()},
                     {"config", {{"incidents", cfg.incidents},
                                 {"blocked_fraction", cfg.blocked_fraction},
                                 {"tau_now", cfg.tau_now},
                                 {"horizon", cfg.horizon}}}});
}

PreprocessTimes preprocess(const fs::path& dir, const PreprocessOptions& options) {
  read_manifest(dir);
  PreprocessTimes times;
  Graph g = load_graph(dir / "graph");
  TravelTimeFunctions p = load_ttfs(dir / "ttf");
  const fs::path out = dir / "preprocess";
  fs::remove_all(out);
  fs::remove_all(dir / "update");
  fs::create_directories(out / "cch");
  fs::create_directories(out / "mmp");
  fs::create_directories(out / "imp");

  auto start = std::chrono::steady_clock::now();
  NodeOrder order = compute_order(g);
  times.order_s = seconds_since(start);
  save_order(out / "order", order);

  start = std::chrono::steady_clock::now();
  CchTopology topo = CchTopology::contract(g, order);
  times.contract_s = seconds_since(start);
  topo.save(out / "cch");

  start = std::chrono::steady_clock::now();
  MmpPreprocessed mmp = mmp_preprocess(topo, p, options.grid, options.mmp_compress_k, options.threads);
  times.mmp_s = seconds_since(start);
  save_mmp(out / "mmp", mmp);
  write_interval_config(out / "mmp" / "intervals.conf", options.grid);

  start = std::chrono::steady_clock::now();
  ImpPreprocessed imp = bucket_customize(topo, p);
  times.imp_s = seconds_since(start);
  if (options.imp_compress_k > 0) {
    start = std::chrono::steady_clock::now();
    compress_profiles(imp, options.imp_compress_k, CompressionOptions{options.threads});
    times.compress_s = seconds_since(start);
  }
  save_profiles(out / "imp" / "profiles.bin", imp.profiles);

  append_phase(dir, {{"phase", "preprocess"},
                     {"config", {{"mmp_compress_k", options.mmp_compress_k},
                                 {"imp_compress_k", options.imp_compress_k},
                                 {"threads", options.threads},
                                 {"grid", grid_json(options.grid)}}},
                     {"cch_edges", topo.num_edges()},
                     {"mmp_metrics", mmp.metrics.count},
                     {"imp_functions", profile_functions(imp)},
                     {"seconds", {{"order", times.order_s},
                                  {"contract", times.contract_s},
                                  {"mmp", times.mmp_s},
                                  {"imp", times.imp_s},
                                  {"imp_compress", times.compress_s}}},
                     {"artifacts", fingerprint(dir, "preprocess")}});
  return times;
}

void compress(const fs::path& dir, std::uint32_t mmp_k, std::uint32_t imp_k, unsigned threads) {
  json manifest = read_manifest(dir);
  const json* prep = last_entry(manifest, {"preprocess", "compress"});
  if (!prep) throw PhaseError("compress needs a preprocessed instance");
  Graph g = load_graph(dir / "graph");
  TravelTimeFunctions p = load_ttfs(dir / "ttf");
  const fs::path out = dir / "preprocess";
  CchTopology topo = CchTopology::load(out / "cch", g, load_order(out / "order"));
  const auto start = std::chrono::steady_clock::now();
  std::uint32_t mmp_metrics = 0, imp_functions = 0;
  if (mmp_k > 0) {
    // Interval metrics are merged before customization, so rebuild from the grid.
    IntervalGridConfig grid = read_interval_config(out / "mmp" / "intervals.conf");
    MmpPreprocessed mmp = mmp_preprocess(topo, p, grid, mmp_k, threads);
    mmp_metrics = mmp.metrics.count;
    save_mmp(out / "mmp", mmp);
  }
  if (imp_k > 0) {
    ImpPreprocessed imp;
    imp.profiles = load_profiles(out / "imp" / "profiles.bin");
    imp.b_min = bucket_minima(imp.profiles);
    if (imp_k < imp.profiles.functions()) compress_profiles(imp, imp_k, CompressionOptions{threads});
    imp_functions = imp.profiles.functions();
    save_profiles(out / "imp" / "profiles.bin", imp.profiles);
  }
  fs::remove_all(dir / "update");
  append_phase(dir, {{"phase", "compress"},
                     {"config", {{"mmp_compress_k", mmp_k}, {"imp_compress_k", imp_k}, {"threads", threads}}},
                     {"mmp_metrics", mmp_metrics},
                     {"imp_functions", imp_functions},
                     {"seconds", seconds_since(start)},
                     {"artifacts", fingerprint(dir, "preprocess")}});
}

namespace {

void load_preprocessed(const fs::path& dir, Graph& g, TravelTimeFunctions& p, CchTopology& topo, MmpPreprocessed& mmp,
                       ImpPreprocessed& imp) {
  g = load_graph(dir / "graph");
  p = load_ttfs(dir / "ttf");
  const fs::path pre = dir / "preprocess";
  topo = CchTopology::load(pre / "cch", g, load_order(pre / "order"));
  mmp = load_mmp(pre / "mmp");
  imp.profiles = load_profiles(pre / "imp" / "profiles.bin");
  imp.b_min = bucket_minima(imp.profiles);
  if (imp.profiles.arcs != 2 * topo.num_edges() || mmp.metrics.edges != topo.num_edges())
    throw std::runtime_error("preprocessing artifacts do not match the contracted graph");
}

}  // namespace

UpdateSummary update(const fs::path& dir, const fs::path& snapshot_file) {
  json manifest = read_manifest(dir);
  if (last_phase(manifest, {"preprocess", "compress"}) < 0) throw PhaseError("update needs a preprocessed instance");
  const auto before = fingerprint(dir, "preprocess");
  const auto start = std::chrono::steady_clock::now();

  Graph g;
  TravelTimeFunctions p;
  CchTopology topo;
  MmpPreprocessed mmp;
  ImpPreprocessed imp;
  load_preprocessed(dir, g, p, topo, mmp, imp);
  LiveSnapshot snapshot = read_snapshot(snapshot_file);

  const auto update_start = std::chrono::steady_clock::now();
  UpdateSummary summary;
  summary.tau_now = snapshot.tau_now;
  LiveOverlay overlay(p, snapshot.tau_now, snapshot.entries, &summary.overlay);
  summary.mmp_removed = mmp_update(topo, mmp, p, overlay).removed_arcs;
  summary.imp_removed = imp_update(topo, imp, p, overlay).removed_arcs;
  summary.seconds = seconds_since(update_start);

  fs::create_directories(dir / "update");
  write_snapshot(dir / "update" / "snapshot.txt", snapshot);

  const auto after = fingerprint(dir, "preprocess");
  if (before != after) throw std::logic_error("update rewrote preprocessing artifacts");
  append_phase(dir, {{"phase", "update"},
                     {"snapshot", fs::absolute(snapshot_file).string()},
                     {"tau_now", snapshot.tau_now},
                     {"accepted", summary.overlay.accepted},
                     {"dropped_not_slower", summary.overlay.dropped_not_slower},
                     {"dropped_invalid", summary.overlay.dropped_invalid},
                     {"mmp_removed_arcs", summary.mmp_removed},
                     {"imp_removed_arcs", summary.imp_removed},
                     {"seconds", {{"update", summary.seconds}, {"total", seconds_since(start)}}},
                     {"preprocess_unchanged", true},
                     {"artifacts", fingerprint(dir, "update")}});
  return summary;
}

SuiteContext Workspace::context() const {
  SuiteContext ctx;
  ctx.graph = &graph;
  ctx.predicted = &predicted;
  ctx.overlay = overlay;
  ctx.topo = &topo;
  ctx.cch_metric = &lower;
  ctx.cch_search = &full;
  ctx.mmp = &mmp;
  ctx.mmp_update = mmp_update ? &*mmp_update : nullptr;
  ctx.imp = &imp;
  ctx.imp_update = imp_update ? &*imp_update : nullptr;
  return ctx;
}

std::unique_ptr<Workspace> load(const fs::path& dir) {
  json manifest = read_manifest(dir);
  const long prep = last_phase(manifest, {"preprocess", "compress"});
  if (prep < 0) throw PhaseError("queries need preprocessing; run preprocess first");
  const long upd = last_phase(manifest, {"update"});
  if (upd < prep || !fs::exists(dir / "update" / "snapshot.txt"))
    throw PhaseError("queries before update: apply a snapshot after the latest preprocessing");

  auto ws = std::make_unique<Workspace>();
  auto start = std::chrono::steady_clock::now();
  load_preprocessed(dir, ws->graph, ws->predicted, ws->topo, ws->mmp, ws->imp);
  ws->lower = basic_customize(ws->topo, ws->predicted.lower_bounds());
  ws->full = SearchTopology::full(ws->topo);
  ws->load_s = seconds_since(start);

  start = std::chrono::steady_clock::now();
  LiveSnapshot snapshot = read_snapshot(dir / "update" / "snapshot.txt");
  ws->overlay = std::make_shared<const LiveOverlay>(ws->predicted, snapshot.tau_now, snapshot.entries);
  ws->mmp_update = mmp_update(ws->topo, ws->mmp, ws->predicted, *ws->overlay);
  ws->imp_update = imp_update(ws->topo, ws->imp, ws->predicted, *ws->overlay);
  ws->update_s = seconds_since(start);
  return ws;
}

BenchOutcome bench(const Workspace& ws, const BenchOptions& options, const fs::path& out) {
  BenchOutcome outcome;
  QuerySpec spec = options.spec;
  if (options.departure == DeparturePolicy::now) {
    spec.departure = ws.overlay->tau_now();
    spec.spread = 0;
  }
  CombinedWeights weights(ws.predicted, ws.overlay);
  std::vector<Query> queries = gen_queries(ws.graph, weights, spec, &outcome.gen);

  const auto start = std::chrono::steady_clock::now();
  outcome.report = run_suite(ws.context(), queries, options.run);
  outcome.query_s = seconds_since(start);

  fs::create_directories(out);
  write_queries(out / "queries.txt", queries);
  {
    std::ofstream csv(out / "report.csv");
    write_report_csv(csv, outcome.report);
  }
  {
    std::ofstream csv(out / "summary.csv");
    write_summary_csv(csv, outcome.report, options.by_hour);
  }
  json algos = json::array();
  for (const auto& s : outcome.report.summary())
    algos.push_back({{"algorithm", to_string(s.algorithm)},
                     {"mean_time_ns", s.mean_time_ns},
                     {"mean_pops", s.mean_pops},
                     {"mean_resettles", s.mean_resettles},
                     {"speedup", s.speedup},
                     {"mismatches", s.mismatches}});
  json run = {{"queries", queries.size()},
              {"kind", to_string(spec.kind)},
              {"seed", spec.seed},
              {"departure", options.departure == DeparturePolicy::now ? "now" : "uniform"},
              {"departure_from", spec.departure},
              {"departure_spread", spec.spread},
              {"resampled_sources", outcome.gen.resampled},
              {"metric_switching", options.run.metric_switching},
              {"threads", options.run.threads},
              {"seconds", {{"load", ws.load_s}, {"update", ws.update_s}, {"queries", outcome.query_s}}},
              {"exact", outcome.report.exact()},
              {"mismatches", outcome.report.mismatches},
              {"algorithms", algos}};
  std::ofstream(out / "run.json") << run.dump(2) << '\n';
  if (!outcome.report.exact()) dump_counterexample(out / "counterexample", ws.context(), outcome.report);
  return outcome;
}

VerifyResult verify(const fs::path& dir, std::size_t sample_queries, std::uint64_t seed) {
  VerifyResult result;
  auto check = [&](bool ok, const std::string& what) { (ok ? result.checks : result.problems).push_back(what); };

  json manifest;
  try {
    manifest = read_manifest(dir);
  } catch (const std::exception& e) {
    result.problems.push_back(e.what());
    return result;
  }
  const json* gen = last_entry(manifest, {"generate"});
  check(gen != nullptr, "manifest records a generate phase");
  if (gen) {
    check((*gen)["artifacts"]["graph"] == json(fingerprint(dir, "graph")), "graph unchanged since generate");
    check((*gen)["artifacts"]["ttf"] == json(fingerprint(dir, "ttf")), "predictions unchanged since generate");
  }
  try {
    TravelTimeFunctions p = load_ttfs(dir / "ttf");
    p.validate();
    Graph g = load_graph(dir / "graph");
    check(p.num_edges() == g.num_edges(), "one travel time function per edge");
    result.checks.push_back("travel time functions are periodic and FIFO");
  } catch (const std::exception& e) {
    result.problems.push_back(std::string("instance: ") + e.what());
    return result;
  }

  const json* prep = last_entry(manifest, {"preprocess", "compress"});
  if (!prep) {
    result.checks.push_back("no preprocessing recorded; skipping later checks");
    return result;
  }
  check((*prep)["artifacts"] == json(fingerprint(dir, "preprocess")),
        "preprocessing artifacts match the latest preprocess/compress phase");

  std::unique_ptr<Workspace> ws;
  try {
    ws = load(dir);
  } catch (const PhaseError& e) {
    result.checks.push_back(std::string("queries skipped: ") + e.what());
    return result;
  } catch (const std::exception& e) {
    result.problems.push_back(std::string("loading: ") + e.what());
    return result;
  }
  if (sample_queries == 0) return result;
  BenchOptions options;
  options.spec.count = sample_queries;
  options.spec.seed = seed;
  options.run.algorithms = {Algorithm::dijkstra, Algorithm::cch_pot, Algorithm::mmp, Algorithm::imp};
  CombinedWeights weights(ws->predicted, ws->overlay);
  options.spec.departure = ws->overlay->tau_now();
  auto queries = gen_queries(ws->graph, weights, options.spec);
  RunReport report = run_suite(ws->context(), queries, options.run);
  check(report.exact(), std::to_string(queries.size()) + " sample queries agree with Dijkstra (" +
                            std::to_string(report.mismatches) + " mismatches)");
  return result;
}

}  // namespace tdpot::pipeline
