#pragma once

// SPDX-License-Identifier: Apache-2.0

// Information-capacity algebra: effective information transferred into a
// model, capacity eta = D(H - L) / N, the Landauer energy floor, the
// initial-loss entropy estimate and the lossless-quantization conditions.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iclab/sources.hpp"
#include "iclab/units.hpp"

namespace iclab {

/// Diagnostic flags attached to derived quantities; values are reported
/// signed and unclamped.
enum class Flag {
  NegativeInformation,  ///< L > H, so D(H - L) < 0
  EtaAboveOne,          ///< eta > 1: H overestimated or N undercounted
  NoCapacity,           ///< N = 0, eta undefined
  CorollaryCaveat,      ///< initial-loss entropy estimate carries init information
  CorollaryBias,        ///< initial-loss estimate disagrees with a known H
};

std::string to_string(Flag f);

struct FlagSet {
  std::vector<Flag> flags;
  void add(Flag f);
  bool has(Flag f) const;
  friend bool operator==(const FlagSet&, const FlagSet&) = default;
};

/// Snapshot (D, H, L, N) of a model on a dataset.
struct ICState {
  double tokens = 0.0;  ///< D
  BitsPerToken entropy;  ///< H
  BitsPerToken loss;     ///< L
  double param_bits = 0.0;  ///< N

  double effective_info() const;        ///< D (H - L), bits
  std::optional<double> eta() const;    ///< empty when N == 0
  FlagSet flags() const;
};

/// I(f+) = D (H - L) in bits; negative when L > H.
double effective_information(double tokens, BitsPerToken entropy, BitsPerToken loss);

/// eta = D (H - L) / N. Throws ValidationError when N <= 0.
double information_capacity(double tokens, BitsPerToken entropy, BitsPerToken loss, double param_bits);

struct TraceRecord {
  std::uint64_t tokens_seen = 0;
  double loss = 0.0;
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Ordered (tokens_seen, loss) records sharing one unit. For traces produced
/// here, loss is the prequential average over the first tokens_seen tokens.
struct TrainingTrace {
  LossUnit unit = LossUnit::Bits;
  std::vector<TraceRecord> records;

  /// tokens_seen strictly increasing, losses finite and >= 0.
  void validate() const;
  /// Same trace with losses in bits.
  TrainingTrace to_bits() const;

  friend bool operator==(const TrainingTrace&, const TrainingTrace&) = default;
};

struct CapacityPoint {
  std::uint64_t tokens = 0;
  double loss_bits = 0.0;
  double effective_info = 0.0;
  double eta = 0.0;
};

/// eta at every record. The trace must already be in bits.
std::vector<CapacityPoint> capacity_trajectory(const TrainingTrace& trace, BitsPerToken entropy, double param_bits);

struct LandauerParams {
  double temperature = 300.0;  ///< kelvin
  double boltzmann = 1.380649e-23;  ///< J/K
};

/// E0 = bits * k_B * T * ln 2, joules.
double landauer_bound(double effective_info_bits, const LandauerParams& params = {});

struct InitialLossEstimate {
  EntropyEstimate estimate;
  FlagSet flags;
};

/// Tolerance beyond which the initial-loss estimate is flagged as biased
/// against a known entropy.
inline constexpr double kCorollaryBiasTolerance = 0.2;

/// Mean loss (bits) over the first `window` records. Always carries the
/// caveat flag; adds the bias flag when `known_entropy` is given and differs
/// by more than kCorollaryBiasTolerance.
InitialLossEstimate entropy_from_initial_loss(const TrainingTrace& trace, std::size_t window,
                                              std::optional<BitsPerToken> known_entropy = std::nullopt);

struct QuantizationSpec {
  unsigned bit_width = 16;         ///< b
  unsigned target_bit_width = 8;   ///< b'
  double eta = 0.0;                ///< capacity before quantization
  std::optional<double> eta_after; ///< capacity after, if measured (<= 1)
};

struct QuantizationVerdict {
  bool necessary_holds = false;     ///< eta b <= b'
  double necessary_margin = 0.0;    ///< b' - eta b
  std::optional<bool> full_holds;   ///< eta b <= eta' b', when eta' given
  std::optional<double> full_margin;
  bool lossless_possible() const { return necessary_holds && full_holds.value_or(true); }
};

QuantizationVerdict quantization_condition(const QuantizationSpec& spec);

}  // namespace iclab
