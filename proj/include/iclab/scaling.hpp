#pragma once

// SPDX-License-Identifier: Apache-2.0

// Power laws L = (x / x_c)^alpha, log-log least-squares fitting, and the
// consistency algebra tying the data and model-size laws to capacity bounds.

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace iclab::scaling {

struct PowerLaw {
  double scale_constant = 1.0;  ///< x_c > 0
  double exponent = 0.0;        ///< alpha
};

/// (x / scale_constant)^exponent. Throws ValidationError for x <= 0.
double eval_power_law(const PowerLaw& law, double x);

/// Loss against training tokens D: x_c = 5.4e13, alpha = -0.095.
inline constexpr PowerLaw kDataLaw{5.4e13, -0.095};
/// Loss against model size N measured in bits. The published constant
/// 8.8e13 counts 16-bit parameters, so the bit-valued scale is 16 * 8.8e13.
inline constexpr double kParameterFormatBits = 16.0;
inline constexpr PowerLaw kModelBitsLaw{kParameterFormatBits * 8.8e13, -0.076};

struct PowerLawFit {
  double exponent = 0.0;
  double log_intercept = 0.0;  ///< ln L at x = 1
  double residual_norm = 0.0;  ///< ||ln L - fitted||_2
  std::size_t points = 0;
  /// Present unless the exponent is zero (a constant has no x_c form).
  std::optional<PowerLaw> law;
};

/// Ordinary least squares of ln L on ln x. Needs >= 3 positive points with at
/// least two distinct x.
PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points);

struct ConsistencyReport {
  double ratio_k = 0.0;  ///< N / D when the two laws share a base
  double eta_low = 0.0;
  double eta_high = 0.0;
  double assumed_entropy = 10.0;
  double assumed_loss_low = 3.0;
  double assumed_loss_high = 7.0;
  double printed_ratio = 26.08;  ///< rounded value quoted in the literature
};

/// N = 16 * (8.8e13 / 5.4e13) * D, eta = (H - L) / k for H = 10, L in [3, 7].
ConsistencyReport derive_token_ratio();

/// Gap between the two exponents' growth: x^0.095 - x^0.076.
double gap_function(double x);

/// n points log-spaced over [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Reference capacity implied by 2 stored bits per parameter at b-bit format.
inline constexpr double kBitsPerParameterReference = 2.0;
inline double reference_eta(unsigned format_bits) { return kBitsPerParameterReference / format_bits; }

}  // namespace iclab::scaling
