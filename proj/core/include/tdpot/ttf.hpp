#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "tdpot/graph.hpp"
#include "tdpot/types.hpp"

namespace tdpot {

class TtfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One periodic piecewise linear travel time function: breakpoints
/// (departure, travel) with departures strictly increasing in [0, kPeriod).
/// The last breakpoint connects linearly to the first one of the next day.
struct TtfView {
  std::span<const std::uint32_t> departure;
  std::span<const std::uint32_t> travel;

  std::size_t size() const { return departure.size(); }
  bool is_constant() const { return departure.size() == 1; }
};

/// Travel time when departing at t. Interpolation truncates toward zero on
/// exact integers, which keeps FIFO functions FIFO.
Duration evaluate(TtfView f, Timestamp t);

/// Exact extrema over the closed interval [a, b]. Intervals of a full period or
/// more return the global extremum.
Duration min_over(TtfView f, Timestamp a, Timestamp b);
Duration max_over(TtfView f, Timestamp a, Timestamp b);

Duration global_min(TtfView f);
Duration global_max(TtfView f);

/// Throws TtfError if departures are not strictly increasing inside the
/// period or a segment (including the wrap-around one) violates FIFO.
void validate_ttf(TtfView f);

/// All edge functions of a graph in struct-of-arrays layout: breakpoints of
/// edge e are [first_bp[e], first_bp[e+1]).
class TravelTimeFunctions {
 public:
  TravelTimeFunctions() : first_bp_{0} {}
  TravelTimeFunctions(std::vector<std::uint32_t> first_bp, std::vector<std::uint32_t> departure,
                      std::vector<std::uint32_t> travel);

  static TravelTimeFunctions constant(std::span<const Weight> weights);

  EdgeId num_edges() const { return static_cast<EdgeId>(first_bp_.size() - 1); }
  std::size_t num_breakpoints() const { return departure_.size(); }

  TtfView function(EdgeId e) const {
    std::size_t b = first_bp_[e], n = first_bp_[e + 1] - b;
    return {std::span(departure_).subspan(b, n), std::span(travel_).subspan(b, n)};
  }

  Duration evaluate(EdgeId e, Timestamp t) const {
    if (first_bp_[e + 1] - first_bp_[e] == 1) return travel_[first_bp_[e]];
    return tdpot::evaluate(function(e), t);
  }

  Duration min_over(EdgeId e, Timestamp a, Timestamp b) const { return tdpot::min_over(function(e), a, b); }
  Duration max_over(EdgeId e, Timestamp a, Timestamp b) const { return tdpot::max_over(function(e), a, b); }

  /// Per-edge global minimum / maximum as scalar weights.
  std::vector<Weight> lower_bounds() const;
  std::vector<Weight> upper_bounds() const;

  void validate() const;

  std::span<const std::uint32_t> first_bp() const { return first_bp_; }
  std::span<const std::uint32_t> departures() const { return departure_; }
  std::span<const std::uint32_t> travels() const { return travel_; }

 private:
  std::vector<std::uint32_t> first_bp_;
  std::vector<std::uint32_t> departure_;
  std::vector<std::uint32_t> travel_;
};

void save_ttfs(const std::filesystem::path& dir, const TravelTimeFunctions& f);
TravelTimeFunctions load_ttfs(const std::filesystem::path& dir);

/// Travel time of a vertex path departing at t, evaluating edges in sequence.
/// `weight(e, t)` is any FIFO travel time callable.
template <class WeightFn>
Duration path_travel_time(const Graph& g, WeightFn&& weight, std::span<const Vertex> path, Timestamp t) {
  Timestamp now = t;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    EdgeId e = g.find_edge(path[i], path[i + 1]);
    if (e == kInvalidId) throw PathError("no edge between consecutive path vertices");
    Duration d = weight(e, now);
    if (d >= kInfinity) return kInfinity;
    now += d;
  }
  return now - t;
}

}  // namespace tdpot
