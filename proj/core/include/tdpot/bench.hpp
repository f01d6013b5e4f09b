#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdpot/cch.hpp"
#include "tdpot/imp.hpp"
#include "tdpot/instance_gen.hpp"
#include "tdpot/mmp.hpp"
#include "tdpot/search.hpp"
#include "tdpot/traffic.hpp"

namespace tdpot {

class PhaseError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class QueryKind { random, one_hour, rank };
enum class Algorithm { dijkstra, cch_pot, mmp, imp };

std::string to_string(QueryKind kind);
std::string to_string(Algorithm algo);
QueryKind parse_query_kind(const std::string& text);
Algorithm parse_algorithm(const std::string& text);

struct QuerySpec {
  QueryKind kind = QueryKind::random;
  /// Queries for random and one-hour sets, sources for rank sets.
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  /// Departure uniform in [departure, departure + spread]; spread 0 fixes
  /// every departure, e.g. at tau_now when live traffic is active.
  Timestamp departure = 0;
  Duration spread = 0;
  Duration one_hour = 3'600'000;
};

struct Query {
  Vertex source = 0;
  Vertex target = 0;
  Timestamp departure = 0;
  std::uint32_t rank = 0;  // Dijkstra rank for rank queries, 0 otherwise
};

struct QueryGenStats {
  std::size_t resampled = 0;  // one-hour sources without a target beyond an hour
};

/// Random: uniform source and target. One-hour: target is the first vertex
/// settled by Dijkstra with distance above one hour. Rank: for each source the
/// vertices settled at positions 2, 4, 8, ... (the source is position 1).
std::vector<Query> gen_queries(const Graph& g, const CombinedWeights& weights, const QuerySpec& spec,
                               QueryGenStats* stats = nullptr);

void write_queries(const std::filesystem::path& file, const std::vector<Query>& queries);
std::vector<Query> read_queries(const std::filesystem::path& file);

/// Everything the algorithms need; phases not run stay null.
struct SuiteContext {
  const Graph* graph = nullptr;
  const TravelTimeFunctions* predicted = nullptr;
  std::shared_ptr<const LiveOverlay> overlay;
  const CchTopology* topo = nullptr;
  // CCH-Potentials on the per-edge global minima of p.
  const Metric* cch_metric = nullptr;
  const SearchTopology* cch_search = nullptr;
  const MmpPreprocessed* mmp = nullptr;
  const MmpUpdate* mmp_update = nullptr;
  const ImpPreprocessed* imp = nullptr;
  const ImpUpdate* imp_update = nullptr;
};

struct RunOptions {
  std::vector<Algorithm> algorithms{Algorithm::dijkstra};
  bool metric_switching = true;
  AstarOptions astar;
  /// Queries are independent; more than one thread splits the batch.
  unsigned threads = 1;
  /// Dijkstra distances already known for these queries and weights; when
  /// set, the reference search is skipped unless dijkstra is requested.
  std::vector<Duration> reference;
};

struct QueryRecord {
  std::size_t query = 0;
  Algorithm algorithm = Algorithm::dijkstra;
  Duration distance = kInfinity;
  std::size_t pops = 0;
  std::size_t resettles = 0;
  std::int64_t time_ns = 0;
};

struct AlgorithmSummary {
  Algorithm algorithm;
  double mean_time_ns = 0;
  double mean_pops = 0;
  double mean_resettles = 0;
  double speedup = 0;  // mean Dijkstra time over mean time
  std::size_t mismatches = 0;
};

struct RunReport {
  std::vector<Query> queries;
  std::vector<Algorithm> algorithms;
  std::vector<QueryRecord> records;   // query-major, algorithms in order
  std::vector<Duration> reference;    // Dijkstra distance per query
  std::size_t mismatches = 0;

  bool exact() const { return mismatches == 0; }
  std::vector<AlgorithmSummary> summary() const;
};

/// Runs every query with Dijkstra as reference and the requested algorithms.
/// Throws PhaseError when an algorithm's phases have not been run.
RunReport run_suite(const SuiteContext& ctx, const std::vector<Query>& queries, const RunOptions& options);

inline constexpr const char* kReportSchema = "# tdpot run report v1; times in ns, distances in ms";

/// One row per (query, algorithm).
void write_report_csv(std::ostream& out, const RunReport& report);
/// One row per algorithm; with by_hour additionally per departure hour.
void write_summary_csv(std::ostream& out, const RunReport& report, bool by_hour = false);

/// Writes the first mismatching query and the part of the instance settled by
/// the reference search up to its target (sub-graph, functions, live entries).
/// Returns false when the report is exact.
bool dump_counterexample(const std::filesystem::path& dir, const SuiteContext& ctx, const RunReport& report);

}  // namespace tdpot
