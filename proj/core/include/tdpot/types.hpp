#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>

namespace tdpot {

using Vertex = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr std::uint32_t kInvalidId = std::numeric_limits<std::uint32_t>::max();

// Times are integer milliseconds. Timestamps are absolute (they may run past
// the first day); periodic functions reduce them modulo kPeriod.
using Timestamp = std::int64_t;
using Duration = std::int64_t;

inline constexpr Duration kPeriod = 86'400'000;
inline constexpr Duration kInfinity = std::numeric_limits<std::int64_t>::max() / 4;

// Stored metric weights. kInfWeight maps to kInfinity and back.
using Weight = std::uint32_t;
inline constexpr Weight kInfWeight = std::numeric_limits<Weight>::max();

constexpr Duration sat_add(Duration a, Duration b) {
  if (a >= kInfinity || b >= kInfinity) return kInfinity;
  return std::min(a + b, kInfinity);
}

constexpr Weight sat_add(Weight a, Weight b) {
  std::uint64_t s = std::uint64_t{a} + b;
  return s >= kInfWeight ? kInfWeight : static_cast<Weight>(s);
}

constexpr Duration to_duration(Weight w) { return w == kInfWeight ? kInfinity : Duration{w}; }

constexpr Weight to_weight(Duration d) {
  return d >= Duration{kInfWeight} ? kInfWeight : static_cast<Weight>(d);
}

constexpr Timestamp time_of_day(Timestamp t) {
  Timestamp r = t % kPeriod;
  return r < 0 ? r + kPeriod : r;
}

}  // namespace tdpot
