// SPDX-License-Identifier: Apache-2.0

// NEON has two double lanes per register; two registers hold the four
// partial sums so the association order matches the scalar reference.

#include <arm_neon.h>

#include <algorithm>
#include <limits>

#include "iclab/kernels.hpp"

namespace iclab::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n4; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double s = vaddvq_f64(lo) + vaddvq_f64(hi);
  for (std::size_t i = n4; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_neon(const double* x, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n4; i += 4) {
    lo = vaddq_f64(lo, vld1q_f64(x + i));
    hi = vaddq_f64(hi, vld1q_f64(x + i + 2));
  }
  double s = vaddvq_f64(lo) + vaddvq_f64(hi);
  for (std::size_t i = n4; i < n; ++i) s += x[i];
  return s;
}

double max_neon(const double* x, std::size_t n) {
  if (n == 0) return -std::numeric_limits<double>::infinity();
  const std::size_t n2 = n & ~std::size_t{1};
  double m = x[0];
  if (n2 > 0) {
    float64x2_t acc = vld1q_f64(x);
    for (std::size_t i = 2; i < n2; i += 2) acc = vmaxq_f64(acc, vld1q_f64(x + i));
    m = vmaxvq_f64(acc);
  }
  for (std::size_t i = n2; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const std::size_t n2 = n & ~std::size_t{1};
  const float64x2_t va = vdupq_n_f64(alpha);
  for (std::size_t i = 0; i < n2; i += 2)
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  for (std::size_t i = n2; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

namespace detail {
const KernelTable kNeonTable{Isa::Neon, dot_neon, sum_neon, max_neon, axpy_neon};
}

}  // namespace iclab::kernels
