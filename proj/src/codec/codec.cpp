// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arithmetic_coder.hpp"
#include "iclab/codec.hpp"
#include "iclab/error.hpp"

namespace iclab {
namespace {

void check_compatible(const TokenStream& stream, const Predictor& predictor) {
  if (stream.vocab_size != predictor.vocab_size())
    throw ValidationError("codec: stream vocabulary " + std::to_string(stream.vocab_size) +
                          " does not match predictor vocabulary " + std::to_string(predictor.vocab_size()));
  stream.validate();
}

void check_codable(std::uint32_t vocab_size) {
  if (vocab_size > kMaxCodecVocab)
    throw ValidationError("codec: vocabulary larger than " + std::to_string(kMaxCodecVocab) +
                          " cannot be coded at 16-bit frequency precision");
}

std::vector<std::uint32_t> cumulative(const std::vector<std::uint32_t>& freq) {
  std::vector<std::uint32_t> cum(freq.size() + 1, 0);
  std::partial_sum(freq.begin(), freq.end(), cum.begin() + 1);
  return cum;
}

// Per-token bookkeeping shared by ideal_codelength and encode.
struct Accumulator {
  CodeReport& report;
  bool keep;

  void add(double p, std::uint32_t freq) {
    if (p < kMinProbability) {
      p = kMinProbability;
      ++report.clamped_probabilities;
    }
    const double bits = -std::log2(p);
    report.ideal_bits += bits;
    report.quantized_ideal_bits += kFrequencyBits - std::log2(static_cast<double>(freq));
    if (keep) report.per_token_bits->push_back(bits);
  }
};

CodeReport make_report(const TokenStream& stream, UpdateMode mode, bool keep) {
  CodeReport r;
  r.mode = mode;
  r.token_count = stream.size();
  if (keep) {
    r.per_token_bits.emplace();
    r.per_token_bits->reserve(stream.size());
  }
  return r;
}

}  // namespace

BitBuffer::BitBuffer(std::vector<std::uint8_t> bytes, std::uint64_t bit_count)
    : bytes_(std::move(bytes)), bit_count_(bit_count) {
  if (bytes_.size() != (bit_count_ + 7) / 8) throw ValidationError("bit buffer: byte length does not match bit count");
}

void BitBuffer::push(bool bit) {
  if ((bit_count_ & 7) == 0) bytes_.push_back(0);
  if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bit_count_ & 7));
  ++bit_count_;
}

void BitBuffer::truncate(std::uint64_t n) {
  if (n >= bit_count_) return;
  bit_count_ = n;
  bytes_.resize((n + 7) / 8);
  if (n & 7) bytes_.back() &= static_cast<std::uint8_t>(0xFFu << (8 - (n & 7)));
}

double overhead_bound(double ideal_bits) { return 32.0 + 2e-4 * ideal_bits; }

std::vector<std::uint32_t> quantize_frequencies(std::span<const double> probabilities) {
  const std::size_t n = probabilities.size();
  if (n == 0 || n > kMaxCodecVocab) throw ValidationError("quantize_frequencies: unsupported vocabulary size");
  std::vector<std::uint32_t> freq(n);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = std::nearbyint(probabilities[i] * kFrequencyTotal);
    freq[i] = scaled < 1.0 ? 1u : static_cast<std::uint32_t>(std::min<double>(scaled, kFrequencyTotal));
    total += freq[i];
  }
  // Settle the rounding residue on the largest entries; the first maximum
  // wins ties so the result is a pure function of the input vector.
  std::int64_t diff = static_cast<std::int64_t>(kFrequencyTotal) - total;
  while (diff != 0) {
    const auto it = std::max_element(freq.begin(), freq.end());
    if (diff > 0) {
      *it += static_cast<std::uint32_t>(diff);
      diff = 0;
    } else {
      const std::int64_t take = std::min<std::int64_t>(-diff, static_cast<std::int64_t>(*it) - 1);
      *it -= static_cast<std::uint32_t>(take);
      diff += take;
    }
  }
  return freq;
}

CodeReport ideal_codelength(const TokenStream& stream, Predictor& predictor, UpdateMode mode, bool keep_per_token) {
  check_compatible(stream, predictor);
  CodeReport report = make_report(stream, mode, keep_per_token);
  std::vector<double> p(predictor.vocab_size());
  const std::span<const Token> all(stream.tokens);
  for (std::size_t t = 0; t < all.size(); ++t) {
    const auto history = all.first(t);
    predictor.predict(history, p);
    double q = p[all[t]];
    if (q < kMinProbability) {
      q = kMinProbability;
      ++report.clamped_probabilities;
    }
    const double bits = -std::log2(q);
    report.ideal_bits += bits;
    if (keep_per_token) report.per_token_bits->push_back(bits);
    if (mode == UpdateMode::Online) predictor.update(history, all[t]);
  }
  return report;
}

Encoded encode(const TokenStream& stream, Predictor& predictor, UpdateMode mode, bool keep_per_token) {
  check_compatible(stream, predictor);
  check_codable(predictor.vocab_size());
  Encoded out;
  out.report = make_report(stream, mode, keep_per_token);
  Accumulator acc{out.report, keep_per_token};
  detail::ArithmeticEncoder coder(out.bits);
  std::vector<double> p(predictor.vocab_size());
  const std::span<const Token> all(stream.tokens);
  for (std::size_t t = 0; t < all.size(); ++t) {
    const auto history = all.first(t);
    predictor.predict(history, p);
    const auto freq = quantize_frequencies(p);
    const Token x = all[t];
    const std::uint64_t lo = std::accumulate(freq.begin(), freq.begin() + x, std::uint64_t{0});
    coder.encode(lo, lo + freq[x], kFrequencyTotal);
    acc.add(p[x], freq[x]);
    if (mode == UpdateMode::Online) predictor.update(history, x);
  }
  coder.finish();
  out.report.total_bits = out.bits.size();
  return out;
}

TokenStream decode(const BitBuffer& bits, Predictor& predictor, UpdateMode mode, std::uint64_t token_count) {
  check_codable(predictor.vocab_size());
  TokenStream out;
  out.vocab_size = predictor.vocab_size();
  out.tokens.reserve(token_count);
  detail::ArithmeticDecoder coder(bits);
  std::vector<double> p(predictor.vocab_size());
  for (std::uint64_t t = 0; t < token_count; ++t) {
    const std::span<const Token> history(out.tokens);
    predictor.predict(history, p);
    const auto cum = cumulative(quantize_frequencies(p));
    const std::uint64_t target = coder.target(kFrequencyTotal);
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    const auto x = static_cast<Token>(std::distance(cum.begin(), it) - 1);
    coder.consume(cum[x], cum[x + 1], kFrequencyTotal);
    if (mode == UpdateMode::Online) predictor.update(history, x);
    out.tokens.push_back(x);
    if (coder.expected_bits() > bits.size())
      throw ValidationError("decode: bit sequence is truncated");
  }
  if (coder.expected_bits() > bits.size())
    throw ValidationError("decode: bit sequence is truncated (" + std::to_string(bits.size()) + " bits, expected " +
                          std::to_string(coder.expected_bits()) + ")");
  if (coder.expected_bits() < bits.size())
    throw ValidationError("decode: " + std::to_string(bits.size() - coder.expected_bits()) +
                          " unexpected trailing bits");
  return out;
}

CompressedFile compress(const TokenStream& stream, Predictor predictor, UpdateMode mode) {
  CompressedFile f;
  f.mode = mode;
  f.predictor_hash = predictor.checkpoint_hash();
  f.token_count = stream.size();
  f.bits = encode(stream, predictor, mode).bits;
  return f;
}

TokenStream decompress(const CompressedFile& file, Predictor predictor) {
  if (predictor.checkpoint_hash() != file.predictor_hash)
    throw ValidationError("decompress: predictor checkpoint hash does not match the container");
  return decode(file.bits, predictor, file.mode, file.token_count);
}

}  // namespace iclab
