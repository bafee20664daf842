// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <limits>

#include "iclab/kernels.hpp"

namespace iclab::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < n4; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (std::size_t i = n4; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_scalar(const double* x, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < n4; i += 4) {
    s0 += x[i];
    s1 += x[i + 1];
    s2 += x[i + 2];
    s3 += x[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (std::size_t i = n4; i < n; ++i) s += x[i];
  return s;
}

double max_scalar(const double* x, std::size_t n) {
  if (n == 0) return -std::numeric_limits<double>::infinity();
  return *std::max_element(x, x + n);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{Isa::Scalar, dot_scalar, sum_scalar, max_scalar, axpy_scalar};
}

}  // namespace iclab::kernels
