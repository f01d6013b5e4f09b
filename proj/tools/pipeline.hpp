#pragma once

// Directory-based phase orchestration shared by the command line driver and
// the acceptance tests. Layout of an instance directory:
//   manifest.json         phases that ran, in order, with seeds and configs
//   graph/ ttf/           generated network and predicted functions
//   snapshots/live.txt    generated live snapshot
//   preprocess/           order, cch/, mmp/, imp/profiles.bin
//   update/snapshot.txt   the applied snapshot

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tdpot/bench.hpp"

namespace tdpot::pipeline {

namespace fs = std::filesystem;

/// Relative path -> content hash for every file below dir/sub.
std::map<std::string, std::string> fingerprint(const fs::path& dir, const std::string& sub);

void generate(const fs::path& dir, const GenConfig& cfg);
/// Draws a snapshot for the instance in dir and writes it to file.
void generate_snapshot(const fs::path& dir, const fs::path& file, const GenConfig& cfg);

struct PreprocessOptions {
  std::uint32_t mmp_compress_k = 0;
  std::uint32_t imp_compress_k = 0;
  unsigned threads = 1;
  IntervalGridConfig grid;
};

struct PreprocessTimes {
  double order_s = 0, contract_s = 0, mmp_s = 0, imp_s = 0, compress_s = 0;
};

PreprocessTimes preprocess(const fs::path& dir, const PreprocessOptions& options);

/// Replaces the compressed (or full) profiles and metrics of an existing
/// preprocessing with k functions each; 0 leaves a technique untouched.
void compress(const fs::path& dir, std::uint32_t mmp_k, std::uint32_t imp_k, unsigned threads);

struct UpdateSummary {
  Timestamp tau_now = 0;
  OverlayLoadStats overlay;
  std::size_t mmp_removed = 0;
  std::size_t imp_removed = 0;
  double seconds = 0;
};

/// Applies a snapshot. Only writes below update/; throws if any
/// preprocessing artifact changed.
UpdateSummary update(const fs::path& dir, const fs::path& snapshot);

/// Everything needed for queries, loaded from dir. The update products are
/// rebuilt from the applied snapshot.
struct Workspace {
  Graph graph;
  TravelTimeFunctions predicted;
  std::shared_ptr<const LiveOverlay> overlay;
  CchTopology topo;
  Metric lower;
  SearchTopology full;
  MmpPreprocessed mmp;
  ImpPreprocessed imp;
  std::optional<MmpUpdate> mmp_update;
  std::optional<ImpUpdate> imp_update;
  double load_s = 0, update_s = 0;

  SuiteContext context() const;
};

/// Throws PhaseError when preprocessing is missing, or when no snapshot was
/// applied after the latest preprocessing.
std::unique_ptr<Workspace> load(const fs::path& dir);

enum class DeparturePolicy { now, uniform };

struct BenchOptions {
  QuerySpec spec;
  DeparturePolicy departure = DeparturePolicy::now;
  RunOptions run;
  bool by_hour = false;
};

struct BenchOutcome {
  RunReport report;
  QueryGenStats gen;
  double query_s = 0;
};

/// Generates queries, runs them and writes queries.txt, report.csv,
/// summary.csv, run.json (and counterexample/ on a mismatch) into out.
BenchOutcome bench(const Workspace& ws, const BenchOptions& options, const fs::path& out);

struct VerifyResult {
  std::vector<std::string> problems;
  std::vector<std::string> checks;
  bool ok() const { return problems.empty(); }
};

VerifyResult verify(const fs::path& dir, std::size_t sample_queries, std::uint64_t seed);

/// The phase names recorded so far, oldest first.
std::vector<std::string> phases(const fs::path& dir);

}  // namespace tdpot::pipeline
