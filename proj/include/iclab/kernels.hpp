#pragma once

// SPDX-License-Identifier: Apache-2.0

// Data-parallel inner loops (dot products, axpy updates, reductions) used by
// the dense predictor. Each routine exists as a scalar reference plus
// AVX2 (x86-64) or NEON (aarch64) variants chosen at runtime.
//
// Association order: four interleaved partial sums over the 4-aligned
// prefix, combined as (s0 + s1) + (s2 + s3), then the tail left to right.
// Variants are bit-identical to the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace iclab::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view name(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*max)(const double* x, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

/// True when this binary carries the variant and the CPU can execute it.
bool available(Isa isa);

/// Every available ISA, scalar first.
std::vector<Isa> available_isas();

/// Kernel table for a specific ISA; throws ValidationError when unavailable.
const KernelTable& table(Isa isa);

/// The table used by library code. Defaults to the widest available ISA,
/// overridable with the ICLAB_SIMD environment variable (scalar|avx2|neon).
const KernelTable& active();

/// Switches the active table. Not thread-safe with respect to concurrent
/// kernel calls; intended for tests and the CLI's --simd flag.
void select(Isa isa);

Isa parse_isa(std::string_view s);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double max(std::span<const double> x) { return active().max(x.data(), x.size()); }
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

/// y[r] = bias[r] + dot(row r of matrix, x) for a row-major rows x x.size() matrix.
void gemv_bias(std::span<const double> matrix, std::span<const double> bias,
               std::span<const double> x, std::span<double> y);

namespace detail {
// Per-ISA tables, defined in kernels_<isa>.cpp.
extern const KernelTable kScalarTable;
#if defined(ICLAB_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(ICLAB_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace iclab::kernels
