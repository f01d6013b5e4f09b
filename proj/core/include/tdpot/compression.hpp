#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tdpot/types.hpp"

namespace tdpot {

class CompressionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Squared difference contribution of one entry; kInfWeight against a finite
/// value costs kInfPenalty.
inline constexpr std::uint64_t kInfPenalty = std::uint64_t{1} << 52;

inline std::uint64_t squared_difference(Weight a, Weight b) {
  if (a == b) return 0;
  if (a == kInfWeight || b == kInfWeight) return kInfPenalty;
  std::uint64_t d = a > b ? a - b : b - a;
  return d * d;
}

/// Saturating full sum of squared differences.
std::uint64_t difference_sum(std::span<const Weight> a, std::span<const Weight> b);

struct MergeStep {
  std::uint32_t first, second;  // function IDs, first < second
  std::uint32_t merged;         // ID of the new function
  std::uint64_t delta;
};

/// Result of compress(). Function IDs: inputs are 0..n-1, every merge creates
/// the next ID. `functions` holds the survivors, renumbered 0..k-1 in
/// increasing order of their merge-time ID.
struct Compressed {
  std::vector<std::vector<Weight>> functions;
  std::vector<std::uint32_t> table;  // input slot -> surviving function
  std::vector<MergeStep> steps;

  std::uint32_t apply(std::uint32_t slot) const { return table[slot]; }
};

struct CompressionOptions {
  unsigned threads = 1;
  /// Entries summed before re-checking the early stopping bound.
  std::size_t chunk = 4096;
};

/// Repeatedly merges the pair with the smallest sum of squared differences
/// (ties: lowest IDs) into its elementwise minimum until k functions remain.
Compressed compress(const std::vector<std::span<const Weight>>& functions, std::uint32_t k,
                    CompressionOptions options = {});

Compressed compress(const std::vector<std::vector<Weight>>& functions, std::uint32_t k,
                    CompressionOptions options = {});

}  // namespace tdpot
