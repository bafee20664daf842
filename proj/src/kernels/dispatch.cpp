// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "iclab/error.hpp"
#include "iclab/kernels.hpp"

namespace iclab::kernels {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(ICLAB_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(ICLAB_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* best_table() {
  if (const char* env = std::getenv("ICLAB_SIMD"); env != nullptr && *env != '\0') {
    return &table(parse_isa(env));
  }
  if (available(Isa::Avx2)) return &table(Isa::Avx2);
  if (available(Isa::Neon)) return &table(Isa::Neon);
  return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{best_table()};
  return slot;
}

}  // namespace

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view s) {
  if (s == "scalar") return Isa::Scalar;
  if (s == "avx2") return Isa::Avx2;
  if (s == "neon") return Isa::Neon;
  throw ValidationError("unknown SIMD variant '" + std::string(s) + "' (expected scalar|avx2|neon)");
}

bool available(Isa isa) { return cpu_supports(isa); }

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  for (Isa isa : {Isa::Avx2, Isa::Neon})
    if (available(isa)) out.push_back(isa);
  return out;
}

const KernelTable& table(Isa isa) {
  if (!available(isa))
    throw ValidationError("SIMD variant '" + std::string(name(isa)) + "' is not available on this host");
  switch (isa) {
#if defined(ICLAB_HAVE_AVX2)
    case Isa::Avx2:
      return detail::kAvx2Table;
#endif
#if defined(ICLAB_HAVE_NEON)
    case Isa::Neon:
      return detail::kNeonTable;
#endif
    default:
      return detail::kScalarTable;
  }
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void select(Isa isa) { active_slot().store(&table(isa), std::memory_order_release); }

void gemv_bias(std::span<const double> matrix, std::span<const double> bias,
               std::span<const double> x, std::span<double> y) {
  const KernelTable& k = active();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < y.size(); ++r) y[r] = bias[r] + k.dot(matrix.data() + r * cols, x.data(), cols);
}

}  // namespace iclab::kernels
