#pragma once

// SPDX-License-Identifier: Apache-2.0

// Carry-less binary arithmetic coder (Witten-Neal-Cleary style) with 62-bit
// registers and pending-bit underflow handling.

#include <cstdint>
#include <span>

#include "iclab/codec.hpp"

namespace iclab::detail {

class ArithmeticEncoder {
 public:
  explicit ArithmeticEncoder(BitBuffer& out) : out_(out) {}
  /// Narrows to [cum_low, cum_high) out of total.
  void encode(std::uint64_t cum_low, std::uint64_t cum_high, std::uint64_t total);
  /// Emits the two disambiguating bits.
  void finish();

 private:
  void emit(bool bit);

  BitBuffer& out_;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = (std::uint64_t{1} << kRegisterBits) - 1;
  std::uint64_t pending_ = 0;
};

class ArithmeticDecoder {
 public:
  explicit ArithmeticDecoder(const BitBuffer& in);
  /// Cumulative count in [0, total) identifying the next symbol.
  std::uint64_t target(std::uint64_t total) const;
  void consume(std::uint64_t cum_low, std::uint64_t cum_high, std::uint64_t total);
  /// Bits the encoder must have produced for the symbols consumed so far.
  std::uint64_t expected_bits() const { return shifts_ + 2; }

 private:
  bool next_bit();

  const BitBuffer& in_;
  std::uint64_t pos_ = 0;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = (std::uint64_t{1} << kRegisterBits) - 1;
  std::uint64_t value_ = 0;
  std::uint64_t shifts_ = 0;
};

}  // namespace iclab::detail
