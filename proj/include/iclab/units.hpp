#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "iclab/error.hpp"

namespace iclab {

inline constexpr double kLn2 = std::numbers::ln2;

enum class LossUnit { Bits, Nats };

inline std::string_view to_string(LossUnit u) { return u == LossUnit::Bits ? "bits" : "nats"; }

inline LossUnit parse_loss_unit(std::string_view s) {
  if (s == "bits") return LossUnit::Bits;
  if (s == "nats") return LossUnit::Nats;
  throw ValidationError("unknown loss unit '" + std::string(s) + "' (expected bits|nats)");
}

inline double nats_to_bits(double nats) { return nats / kLn2; }
inline double bits_to_nats(double bits) { return bits * kLn2; }

/// Per-token information quantity in bits. Everything in the IC algebra is
/// carried in this unit; nats enter only through from_nats().
struct BitsPerToken {
  double value = 0.0;

  constexpr BitsPerToken() = default;
  constexpr explicit BitsPerToken(double bits) : value(bits) {}
  static BitsPerToken from_nats(double nats) { return BitsPerToken(nats_to_bits(nats)); }
  static BitsPerToken from(double v, LossUnit unit) {
    return unit == LossUnit::Bits ? BitsPerToken(v) : from_nats(v);
  }

  friend constexpr auto operator<=>(BitsPerToken, BitsPerToken) = default;
};

}  // namespace iclab
