// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 (and without FMA); only reached after a runtime
// __builtin_cpu_supports("avx2") check in dispatch.cpp.

#include <immintrin.h>

#include <algorithm>
#include <limits>

#include "iclab/kernels.hpp"

namespace iclab::kernels {
namespace {

inline double reduce_pairs(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, prod);
  }
  double s = reduce_pairs(acc);
  for (std::size_t i = n4; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_avx2(const double* x, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = reduce_pairs(acc);
  for (std::size_t i = n4; i < n; ++i) s += x[i];
  return s;
}

double max_avx2(const double* x, std::size_t n) {
  if (n == 0) return -std::numeric_limits<double>::infinity();
  const std::size_t n4 = n & ~std::size_t{3};
  double m = x[0];
  if (n4 > 0) {
    __m256d acc = _mm256_loadu_pd(x);
    for (std::size_t i = 4; i < n4; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    m = std::max(std::max(lane[0], lane[1]), std::max(lane[2], lane[3]));
  }
  for (std::size_t i = n4; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  const __m256d va = _mm256_set1_pd(alpha);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (std::size_t i = n4; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table{Isa::Avx2, dot_avx2, sum_avx2, max_avx2, axpy_avx2};
}

}  // namespace iclab::kernels
