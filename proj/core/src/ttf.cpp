#include "tdpot/ttf.hpp"

#include <algorithm>
#include <string>

#include "tdpot/vector_io.hpp"

namespace tdpot {

namespace {

Duration interpolate(Timestamp t1, Duration w1, Timestamp t2, Duration w2, Timestamp t) {
  return w1 + (w2 - w1) * (t - t1) / (t2 - t1);
}

template <class Better>
Duration extremum_over(TtfView f, Timestamp a, Timestamp b, Better better) {
  if (f.is_constant()) return f.travel[0];
  Duration best = evaluate(f, a);
  Duration at_b = evaluate(f, b);
  if (better(at_b, best)) best = at_b;
  if (b - a >= kPeriod) {
    for (auto w : f.travel)
      if (better(Duration{w}, best)) best = w;
    return best;
  }
  const Timestamp day_start = a - time_of_day(a);
  for (std::size_t i = 0; i < f.size(); ++i) {
    Timestamp d = day_start + f.departure[i];
    if (d <= a) d += kPeriod;
    if (d < b && better(Duration{f.travel[i]}, best)) best = f.travel[i];
  }
  return best;
}

}  // namespace

Duration evaluate(TtfView f, Timestamp t) {
  if (f.is_constant()) return f.travel[0];
  const Timestamp x = time_of_day(t);
  const auto& dep = f.departure;
  auto it = std::upper_bound(dep.begin(), dep.end(), static_cast<std::uint32_t>(x));
  std::size_t i = static_cast<std::size_t>(it - dep.begin());
  const std::size_t last = f.size() - 1;
  if (i == 0) {
    // Before the first breakpoint: wrap segment from the previous day.
    return interpolate(Timestamp{dep[last]} - kPeriod, f.travel[last], dep[0], f.travel[0], x);
  }
  if (i == f.size()) {
    return interpolate(dep[last], f.travel[last], Timestamp{dep[0]} + kPeriod, f.travel[0], x);
  }
  return interpolate(dep[i - 1], f.travel[i - 1], dep[i], f.travel[i], x);
}

Duration min_over(TtfView f, Timestamp a, Timestamp b) {
  return extremum_over(f, a, b, [](Duration x, Duration y) { return x < y; });
}

Duration max_over(TtfView f, Timestamp a, Timestamp b) {
  return extremum_over(f, a, b, [](Duration x, Duration y) { return x > y; });
}

Duration global_min(TtfView f) { return *std::min_element(f.travel.begin(), f.travel.end()); }
Duration global_max(TtfView f) { return *std::max_element(f.travel.begin(), f.travel.end()); }

void validate_ttf(TtfView f) {
  if (f.size() == 0) throw TtfError("function without breakpoints");
  if (f.departure.size() != f.travel.size()) throw TtfError("departure/travel size mismatch");
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (Timestamp{f.departure[i]} >= kPeriod) throw TtfError("breakpoint outside of the period");
    if (i > 0 && f.departure[i] <= f.departure[i - 1]) throw TtfError("departures not strictly increasing");
  }
  if (f.size() == 1) return;
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::size_t j = (i + 1) % f.size();
    Timestamp t1 = f.departure[i];
    Timestamp t2 = j == 0 ? Timestamp{f.departure[0]} + kPeriod : Timestamp{f.departure[j]};
    Duration dw = Duration{f.travel[j]} - Duration{f.travel[i]};
    if (dw < -(t2 - t1))
      throw TtfError("FIFO violated between breakpoints at " + std::to_string(t1) + " and " + std::to_string(t2));
  }
}

TravelTimeFunctions::TravelTimeFunctions(std::vector<std::uint32_t> first_bp, std::vector<std::uint32_t> departure,
                                         std::vector<std::uint32_t> travel)
    : first_bp_(std::move(first_bp)), departure_(std::move(departure)), travel_(std::move(travel)) {
  if (first_bp_.empty() || first_bp_.front() != 0 || first_bp_.back() != departure_.size() ||
      departure_.size() != travel_.size())
    throw TtfError("inconsistent breakpoint arrays");
  for (std::size_t e = 0; e + 1 < first_bp_.size(); ++e)
    if (first_bp_[e + 1] <= first_bp_[e]) throw TtfError("edge " + std::to_string(e) + " has no breakpoint");
}

TravelTimeFunctions TravelTimeFunctions::constant(std::span<const Weight> weights) {
  std::vector<std::uint32_t> first(weights.size() + 1);
  for (std::size_t e = 0; e <= weights.size(); ++e) first[e] = static_cast<std::uint32_t>(e);
  return TravelTimeFunctions(std::move(first), std::vector<std::uint32_t>(weights.size(), 0),
                             std::vector<std::uint32_t>(weights.begin(), weights.end()));
}

std::vector<Weight> TravelTimeFunctions::lower_bounds() const {
  std::vector<Weight> out(num_edges());
  for (EdgeId e = 0; e < num_edges(); ++e) out[e] = to_weight(global_min(function(e)));
  return out;
}

std::vector<Weight> TravelTimeFunctions::upper_bounds() const {
  std::vector<Weight> out(num_edges());
  for (EdgeId e = 0; e < num_edges(); ++e) out[e] = to_weight(global_max(function(e)));
  return out;
}

void TravelTimeFunctions::validate() const {
  for (EdgeId e = 0; e < num_edges(); ++e) {
    try {
      validate_ttf(function(e));
    } catch (const TtfError& err) {
      throw TtfError("edge " + std::to_string(e) + ": " + err.what());
    }
  }
}

void save_ttfs(const std::filesystem::path& dir, const TravelTimeFunctions& f) {
  std::filesystem::create_directories(dir);
  save_vector(dir / "ttf_first_bp", std::vector<std::uint32_t>(f.first_bp().begin(), f.first_bp().end()));
  save_vector(dir / "bp_departure", std::vector<std::uint32_t>(f.departures().begin(), f.departures().end()));
  save_vector(dir / "bp_travel", std::vector<std::uint32_t>(f.travels().begin(), f.travels().end()));
}

TravelTimeFunctions load_ttfs(const std::filesystem::path& dir) {
  return TravelTimeFunctions(load_vector<std::uint32_t>(dir / "ttf_first_bp"),
                             load_vector<std::uint32_t>(dir / "bp_departure"),
                             load_vector<std::uint32_t>(dir / "bp_travel"));
}

}  // namespace tdpot
