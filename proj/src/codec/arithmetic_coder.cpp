// SPDX-License-Identifier: Apache-2.0

#include "arithmetic_coder.hpp"

namespace iclab::detail {
namespace {

using u128 = unsigned __int128;

constexpr std::uint64_t kHalf = std::uint64_t{1} << (kRegisterBits - 1);
constexpr std::uint64_t kQuarter = std::uint64_t{1} << (kRegisterBits - 2);

// Shared interval update; both sides must compute it identically.
inline void narrow(std::uint64_t& low, std::uint64_t& high, std::uint64_t cum_low, std::uint64_t cum_high,
                   std::uint64_t total) {
  const u128 range = u128{high - low} + 1;
  high = low + static_cast<std::uint64_t>(range * cum_high / total) - 1;
  low = low + static_cast<std::uint64_t>(range * cum_low / total);
}

}  // namespace

void ArithmeticEncoder::emit(bool bit) {
  out_.push(bit);
  for (; pending_ > 0; --pending_) out_.push(!bit);
}

void ArithmeticEncoder::encode(std::uint64_t cum_low, std::uint64_t cum_high, std::uint64_t total) {
  narrow(low_, high_, cum_low, cum_high, total);
  for (;;) {
    if (high_ < kHalf) {
      emit(false);
    } else if (low_ >= kHalf) {
      emit(true);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kHalf + kQuarter) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
  }
}

void ArithmeticEncoder::finish() {
  ++pending_;
  emit(low_ >= kQuarter);
}

ArithmeticDecoder::ArithmeticDecoder(const BitBuffer& in) : in_(in) {
  for (unsigned i = 0; i < kRegisterBits; ++i) value_ = (value_ << 1) | (next_bit() ? 1 : 0);
}

bool ArithmeticDecoder::next_bit() {
  // Past the end the encoder's implicit trailing zeros apply.
  const bool bit = pos_ < in_.size() && in_[pos_];
  ++pos_;
  return bit;
}

std::uint64_t ArithmeticDecoder::target(std::uint64_t total) const {
  const u128 range = u128{high_ - low_} + 1;
  return static_cast<std::uint64_t>((u128{value_ - low_ + 1} * total - 1) / range);
}

void ArithmeticDecoder::consume(std::uint64_t cum_low, std::uint64_t cum_high, std::uint64_t total) {
  narrow(low_, high_, cum_low, cum_high, total);
  for (;;) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      value_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kHalf + kQuarter) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      value_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
    value_ = (value_ << 1) | (next_bit() ? 1 : 0);
    ++shifts_;
  }
}

}  // namespace iclab::detail
