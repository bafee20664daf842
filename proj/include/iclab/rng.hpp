#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <random>
#include <span>

namespace iclab {

/// std::mt19937_64 with a single 64-bit seed. Derived draws use integer ops
/// and exact scaling only, so sequences match across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Index i drawn with probability weights[i] (weights sum to ~1).
  /// Falls back to the last positive entry to absorb rounding in the tail.
  std::size_t categorical(std::span<const double> weights) {
    const double u = uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      acc += weights[i];
      if (u < acc) return i;
    }
    return last_positive;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace iclab
