#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "tdpot/graph.hpp"
#include "tdpot/traffic.hpp"
#include "tdpot/ttf.hpp"

namespace tdpot {

class GenError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Stateless generator: every draw is a hash of (seed, stream, id, counter), so
/// the value for an entity does not depend on generation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t id);

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [lo, hi].
  std::int64_t range(std::int64_t lo, std::int64_t hi);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct GenConfig {
  std::uint64_t seed = 1;
  std::uint32_t width = 64;
  std::uint32_t height = 64;

  // Grid geometry and speeds. Edge lengths are jittered around spacing_m.
  double spacing_m = 450;
  double length_jitter = 0.3;
  double local_kmh_min = 20;
  double local_kmh_max = 40;
  // Every highway_every-th row and column carries a fast line with edges
  // skipping highway_span vertices.
  std::uint32_t highway_every = 16;
  std::uint32_t highway_span = 4;
  double highway_kmh = 70;
  // Probability of a diagonal shortcut per grid cell.
  double diagonal_probability = 0.0;

  // Predictions.
  double td_fraction = 0.38;
  std::uint32_t max_breakpoints = 30;
  double morning_peak_h = 8.0;
  double evening_peak_h = 17.5;
  double peak_factor_min = 1.2;
  double peak_factor_max = 2.5;

  // Live traffic.
  std::uint32_t incidents = 0;
  double blocked_fraction = 0.01;
  Timestamp tau_now = 8 * 3'600'000;
  Duration horizon = 3'600'000;
};

struct Network {
  Graph graph;
  std::vector<Weight> free_flow;
};

/// Perturbed bidirected grid with highway lines. Throws GenError for
/// degenerate dimensions.
Network gen_network(const GenConfig& cfg);

/// Rush-hour profiles on a td_fraction share of the edges, never below free flow.
TravelTimeFunctions gen_predictions(const GenConfig& cfg, const Network& net);

/// Incidents on distinct random edges with live > p(e, tau_now).
LiveSnapshot gen_live(const GenConfig& cfg, const Graph& g, const TravelTimeFunctions& p);

}  // namespace tdpot
