// SPDX-License-Identifier: Apache-2.0

#include "iclab/scaling.hpp"

#include <algorithm>
#include <cmath>

#include "iclab/error.hpp"

namespace iclab::scaling {

double eval_power_law(const PowerLaw& law, double x) {
  if (!(x > 0.0)) throw ValidationError("eval_power_law: x must be > 0");
  if (!(law.scale_constant > 0.0)) throw ValidationError("eval_power_law: scale constant must be > 0");
  return std::pow(x / law.scale_constant, law.exponent);
}

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw ValidationError("fit_power_law: need at least 3 points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw ValidationError("fit_power_law: points must be positive");
    mx += std::log(x);
    my += std::log(y);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("fit_power_law: degenerate input, all x are equal");

  PowerLawFit fit;
  fit.points = points.size();
  fit.exponent = sxy / sxx;
  fit.log_intercept = my - fit.exponent * mx;
  double rss = 0.0;
  for (const auto& [x, y] : points) {
    const double r = std::log(y) - (fit.log_intercept + fit.exponent * std::log(x));
    rss += r * r;
  }
  fit.residual_norm = std::sqrt(rss);
  // ln L = alpha ln x - alpha ln x_c
  if (std::abs(fit.exponent) > 1e-12) fit.law = PowerLaw{std::exp(-fit.log_intercept / fit.exponent), fit.exponent};
  return fit;
}

ConsistencyReport derive_token_ratio() {
  ConsistencyReport r;
  // Equal bases: 5.4e13 / D = 8.8e13 / (N / 16).
  r.ratio_k = kParameterFormatBits * (8.8e13 / kDataLaw.scale_constant);
  r.eta_low = (r.assumed_entropy - r.assumed_loss_high) / r.ratio_k;
  r.eta_high = (r.assumed_entropy - r.assumed_loss_low) / r.ratio_k;
  return r;
}

double gap_function(double x) {
  if (!(x > 0.0)) throw ValidationError("gap_function: x must be > 0");
  return std::pow(x, 0.095) - std::pow(x, 0.076);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 2) throw ValidationError("log_grid: need 0 < lo <= hi and n >= 2");
  std::vector<double> out(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace iclab::scaling
