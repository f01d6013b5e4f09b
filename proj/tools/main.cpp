// tdpot: command line driver for the time-dependent routing pipeline.
//
//   tdpot generate   --out DIR [--seed S] [--width W] ...
//   tdpot preprocess DIR [--compress-k K] [--threads T]
//   tdpot update     DIR --snapshot FILE
//   tdpot query      DIR --source S --target T [--departure MS] [--algo A]...
//   tdpot bench      DIR --queries N --kind {random,1h,rank} --out DIR [--algo A]...
//   tdpot verify     DIR
//   tdpot compress   DIR --compress-k K

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "pipeline.hpp"

namespace fs = std::filesystem;
using namespace tdpot;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kMismatch = 1;
constexpr int kFailure = 2;

std::vector<Algorithm> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<Algorithm> out{Algorithm::dijkstra};
  if (names.empty()) {
    out.insert(out.end(), {Algorithm::cch_pot, Algorithm::mmp, Algorithm::imp});
    return out;
  }
  for (const auto& n : names) {
    Algorithm a = parse_algorithm(n);
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  }
  return out;
}

void print_summary(const RunReport& report) {
  std::printf("%-9s %14s %12s %10s %9s %10s\n", "algorithm", "mean_time_ms", "mean_pops", "resettles", "speedup",
              "mismatches");
  for (const auto& s : report.summary())
    std::printf("%-9s %14.3f %12.1f %10.2f %9.2f %10zu\n", to_string(s.algorithm).c_str(), s.mean_time_ns / 1e6,
                s.mean_pops, s.mean_resettles, s.speedup, s.mismatches);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-dependent shortest paths with A* potentials"};
  app.require_subcommand(1);

  // generate
  GenConfig gen;
  fs::path gen_out, gen_snapshot;
  bool snapshot_only = false;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic instance with a live snapshot");
  generate->add_option("--out", gen_out, "Instance directory")->required();
  generate->add_option("--seed", gen.seed, "Generator seed");
  generate->add_option("--width", gen.width, "Grid width");
  generate->add_option("--height", gen.height, "Grid height");
  generate->add_option("--spacing", gen.spacing_m, "Mean edge length in metres");
  generate->add_option("--td-fraction", gen.td_fraction, "Share of time-dependent edges");
  generate->add_option("--incidents", gen.incidents, "Live incidents in the snapshot");
  generate->add_option("--blocked", gen.blocked_fraction, "Share of incidents that block their edge");
  generate->add_option("--tau-now", gen.tau_now, "Snapshot time in ms");
  generate->add_option("--horizon", gen.horizon, "Longest incident duration in ms");
  generate->add_option("--snapshot", gen_snapshot, "With --snapshot-only: file to write");
  generate->add_flag("--snapshot-only", snapshot_only, "Only draw a new snapshot for an existing instance");

  // preprocess
  fs::path dir;
  pipeline::PreprocessOptions pre;
  std::uint32_t compress_k = 0;
  fs::path grid_file;
  auto* preprocess = app.add_subcommand("preprocess", "Order, contract and run MMP and IMP preprocessing");
  preprocess->add_option("dir", dir, "Instance directory")->required();
  preprocess->add_option("--compress-k", compress_k, "Compress MMP metrics and IMP profiles to K functions");
  preprocess->add_option("--mmp-compress-k", pre.mmp_compress_k, "Compress only MMP");
  preprocess->add_option("--imp-compress-k", pre.imp_compress_k, "Compress only IMP");
  preprocess->add_option("--threads", pre.threads, "Threads for compression");
  preprocess->add_option("--intervals", grid_file, "Interval grid config file")->check(CLI::ExistingFile);

  // update
  fs::path snapshot;
  auto* update = app.add_subcommand("update", "Apply a live snapshot");
  update->add_option("dir", dir, "Instance directory")->required();
  update->add_option("--snapshot", snapshot, "Snapshot file")->required()->check(CLI::ExistingFile);

  // query
  Vertex source = 0, target = 0;
  std::optional<Timestamp> departure;
  std::vector<std::string> algos;
  bool no_switching = false;
  auto* query = app.add_subcommand("query", "Run one query with every selected algorithm");
  query->add_option("dir", dir, "Instance directory")->required();
  query->add_option("--source", source)->required();
  query->add_option("--target", target)->required();
  query->add_option("--departure", departure, "Departure in ms (default: snapshot time)");
  query->add_option("--algo", algos, "dijkstra, cchpot, mmp, imp (repeatable)");
  query->add_flag("--no-switching", no_switching, "Disable MMP metric switching");

  // bench
  pipeline::BenchOptions bench_opt;
  std::string kind = "random", dep_policy = "now";
  fs::path bench_out;
  bool by_hour = false;
  auto* bench = app.add_subcommand("bench", "Generate a query set and run the exactness-gated suite");
  bench->add_option("dir", dir, "Instance directory")->required();
  bench->add_option("--queries", bench_opt.spec.count, "Queries (sources for rank)");
  bench->add_option("--kind", kind, "random, 1h or rank")->check(CLI::IsMember({"random", "1h", "rank"}));
  bench->add_option("--seed", bench_opt.spec.seed, "Query seed");
  bench->add_option("--algo", algos, "dijkstra, cchpot, mmp, imp (repeatable; default all)");
  bench->add_option("--departure", dep_policy, "now: snapshot time; uniform: --from + [0, --spread]")
      ->check(CLI::IsMember({"now", "uniform"}));
  bench->add_option("--from", bench_opt.spec.departure, "First departure for uniform departures (ms)");
  bench->add_option("--spread", bench_opt.spec.spread, "Departure spread for uniform departures (ms)");
  bench->add_option("--threads", bench_opt.run.threads, "Run independent queries in parallel");
  bench->add_option("--out", bench_out, "Report directory")->required();
  bench->add_flag("--by-hour", by_hour, "Add per departure hour rows to summary.csv");
  bench->add_flag("--no-switching", no_switching, "Disable MMP metric switching");
  bench->add_flag("--skip-chains", bench_opt.run.astar.skip_chains, "Walk degree-two chains without queueing");

  // verify
  std::size_t verify_queries = 20;
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "Check artifacts against the manifest and sample queries");
  verify->add_option("dir", dir, "Instance directory")->required();
  verify->add_option("--queries", verify_queries, "Sample queries (0 skips)");
  verify->add_option("--seed", verify_seed, "Sample seed");

  // compress
  std::uint32_t mmp_k = 0, imp_k = 0;
  unsigned threads = 1;
  auto* compress = app.add_subcommand("compress", "Compress existing MMP metrics and IMP profiles");
  compress->add_option("dir", dir, "Instance directory")->required();
  compress->add_option("--compress-k", compress_k, "Functions to keep for both");
  compress->add_option("--mmp-k", mmp_k, "Functions to keep for MMP");
  compress->add_option("--imp-k", imp_k, "Functions to keep for IMP");
  compress->add_option("--threads", threads, "Threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      if (snapshot_only) {
        if (gen_snapshot.empty()) throw CLI::ValidationError("--snapshot-only needs --snapshot FILE");
        pipeline::generate_snapshot(gen_out, gen_snapshot, gen);
        std::printf("snapshot written to %s\n", gen_snapshot.c_str());
      } else {
        pipeline::generate(gen_out, gen);
        std::printf("instance written to %s\n", gen_out.c_str());
      }
    } else if (*preprocess) {
      if (compress_k > 0) {
        if (pre.mmp_compress_k == 0) pre.mmp_compress_k = compress_k;
        if (pre.imp_compress_k == 0) pre.imp_compress_k = compress_k;
      }
      if (!grid_file.empty()) pre.grid = read_interval_config(grid_file);
      auto t = pipeline::preprocess(dir, pre);
      std::printf("order %.2fs contract %.2fs mmp %.2fs imp %.2fs compress %.2fs\n", t.order_s, t.contract_s, t.mmp_s,
                  t.imp_s, t.compress_s);
    } else if (*update) {
      auto s = pipeline::update(dir, snapshot);
      std::printf("tau_now %lld: %zu entries accepted, %zu not slower, %zu invalid; removed arcs mmp %zu imp %zu; %.2fs\n",
                  static_cast<long long>(s.tau_now), s.overlay.accepted, s.overlay.dropped_not_slower,
                  s.overlay.dropped_invalid, s.mmp_removed, s.imp_removed, s.seconds);
    } else if (*query) {
      auto ws = pipeline::load(dir);
      if (source >= ws->graph.num_vertices() || target >= ws->graph.num_vertices())
        throw std::invalid_argument("vertex out of range");
      RunOptions run;
      run.algorithms = parse_algorithms(algos);
      run.metric_switching = !no_switching;
      Query q{source, target, departure.value_or(ws->overlay->tau_now()), 0};
      RunReport report = run_suite(ws->context(), {q}, run);
      for (const auto& r : report.records)
        std::printf("%-9s distance_ms %s pops %zu resettles %zu time_ms %.3f\n", to_string(r.algorithm).c_str(),
                    r.distance >= kInfinity ? "inf" : std::to_string(r.distance).c_str(), r.pops, r.resettles,
                    static_cast<double>(r.time_ns) / 1e6);
      if (!report.exact()) {
        std::fprintf(stderr, "exactness gate failed\n");
        return kMismatch;
      }
    } else if (*bench) {
      auto ws = pipeline::load(dir);
      bench_opt.spec.kind = parse_query_kind(kind);
      bench_opt.departure = dep_policy == "now" ? pipeline::DeparturePolicy::now : pipeline::DeparturePolicy::uniform;
      bench_opt.run.algorithms = parse_algorithms(algos);
      bench_opt.run.metric_switching = !no_switching;
      bench_opt.by_hour = by_hour;
      auto outcome = pipeline::bench(*ws, bench_opt, bench_out);
      std::printf("%zu queries (%zu sources resampled); load %.2fs update %.2fs queries %.2fs\n",
                  outcome.report.queries.size(), outcome.gen.resampled, ws->load_s, ws->update_s, outcome.query_s);
      print_summary(outcome.report);
      if (!outcome.report.exact()) {
        std::fprintf(stderr, "exactness gate failed: %zu mismatches, counterexample in %s\n",
                     outcome.report.mismatches, (bench_out / "counterexample").c_str());
        return kMismatch;
      }
    } else if (*verify) {
      auto result = pipeline::verify(dir, verify_queries, verify_seed);
      for (const auto& c : result.checks) std::printf("ok      %s\n", c.c_str());
      for (const auto& p : result.problems) std::printf("FAILED  %s\n", p.c_str());
      return result.ok() ? kOk : kMismatch;
    } else if (*compress) {
      if (compress_k > 0) {
        if (mmp_k == 0) mmp_k = compress_k;
        if (imp_k == 0) imp_k = compress_k;
      }
      if (mmp_k == 0 && imp_k == 0) throw CLI::ValidationError("compress needs --compress-k, --mmp-k or --imp-k");
      pipeline::compress(dir, mmp_k, imp_k, threads);
      std::printf("compressed; apply a snapshot with update before querying\n");
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const PhaseError& e) {
    std::fprintf(stderr, "phase error: %s\n", e.what());
    return kFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
