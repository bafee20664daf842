#pragma once

// SPDX-License-Identifier: Apache-2.0

// Arithmetic coding driven by a Predictor: the stream's codelength is the sum
// of per-token surprisals under the predictor, realized as actual bits.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "iclab/predictors.hpp"
#include "iclab/sources.hpp"

namespace iclab {

/// MSB-first bit sequence.
class BitBuffer {
 public:
  BitBuffer() = default;
  BitBuffer(std::vector<std::uint8_t> bytes, std::uint64_t bit_count);

  void push(bool bit);
  bool operator[](std::uint64_t i) const { return (bytes_[i >> 3] >> (7 - (i & 7))) & 1u; }
  std::uint64_t size() const { return bit_count_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  /// Keeps the first n bits.
  void truncate(std::uint64_t n);

  friend bool operator==(const BitBuffer&, const BitBuffer&) = default;

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t bit_count_ = 0;
};

struct CodeReport {
  std::uint64_t total_bits = 0;       ///< emitted length (0 for ideal_codelength)
  double ideal_bits = 0.0;            ///< sum of -log2 P under the predictor
  double quantized_ideal_bits = 0.0;  ///< sum of -log2 of the coded frequencies
  std::optional<std::vector<double>> per_token_bits;
  UpdateMode mode = UpdateMode::Frozen;
  std::uint64_t token_count = 0;
  /// Probabilities below 2^-64 that were clamped before taking the log.
  std::uint64_t clamped_probabilities = 0;

  /// Average cross-entropy in bits/token (0 for an empty stream).
  double average_bits() const { return token_count ? ideal_bits / static_cast<double>(token_count) : 0.0; }
};

/// Coder precision: cumulative frequencies total 2^16, registers are 62 bits.
inline constexpr unsigned kFrequencyBits = 16;
inline constexpr std::uint32_t kFrequencyTotal = std::uint32_t{1} << kFrequencyBits;
inline constexpr unsigned kRegisterBits = 62;
inline constexpr std::uint32_t kMaxCodecVocab = kFrequencyTotal / 2;
inline constexpr double kMinProbability = 0x1.0p-64;

/// Allowed gap between emitted and ideal length: 32 + 2e-4 * ideal_bits.
double overhead_bound(double ideal_bits);

/// Integer frequencies summing to 2^16 with every symbol at least 1. The one
/// routine both encoder and decoder use, so the coded distribution is
/// bit-identical on both sides.
std::vector<std::uint32_t> quantize_frequencies(std::span<const double> probabilities);

/// Sum of -log2 P(x_t | x_<t) over the stream. Online mode updates the
/// predictor after each token (prequential evaluation).
CodeReport ideal_codelength(const TokenStream& stream, Predictor& predictor, UpdateMode mode,
                            bool keep_per_token = false);

struct Encoded {
  BitBuffer bits;
  CodeReport report;
};

/// Encodes the stream. `predictor` is the shared codebook; on return it holds
/// the same state ideal_codelength would leave behind.
Encoded encode(const TokenStream& stream, Predictor& predictor, UpdateMode mode, bool keep_per_token = false);

/// Inverse of encode(). `predictor` must be in the encoder's initial state.
/// Throws ValidationError if the bit sequence is truncated or over-long.
TokenStream decode(const BitBuffer& bits, Predictor& predictor, UpdateMode mode, std::uint64_t token_count);

// Compressed container, integers little-endian:
//
//   offset  size  field
//   0       8     magic "ICLCODE1"
//   8       4     u32 format version (1)
//   12      1     u8 mode (0 frozen, 1 online)
//   13      8     u64 FNV-1a hash of the initial predictor checkpoint
//   21      8     u64 token_count
//   29      8     u64 bit_count
//   37      ...   ceil(bit_count / 8) bytes of code bits, MSB first
struct CompressedFile {
  UpdateMode mode = UpdateMode::Frozen;
  std::uint64_t predictor_hash = 0;
  std::uint64_t token_count = 0;
  BitBuffer bits;

  friend bool operator==(const CompressedFile&, const CompressedFile&) = default;
};

inline constexpr std::uint32_t kContainerVersion = 1;

std::vector<std::uint8_t> serialize_container(const CompressedFile& file);
CompressedFile deserialize_container(std::span<const std::uint8_t> bytes);

/// encode() plus container framing; `predictor` is consumed as the initial state.
CompressedFile compress(const TokenStream& stream, Predictor predictor, UpdateMode mode);
/// Checks the predictor hash, then decodes.
TokenStream decompress(const CompressedFile& file, Predictor predictor);

}  // namespace iclab
