// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "iclab/error.hpp"
#include "iclab/predictors.hpp"

namespace iclab {
namespace {
constexpr std::size_t kMaxCells = std::size_t{1} << 28;

std::uint64_t width_max(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}
}  // namespace

NGramModel::NGramModel(std::uint32_t vocab_size, unsigned order, double smoothing, unsigned count_bits)
    : vocab_size_(vocab_size), order_(order), smoothing_(smoothing), count_bits_(count_bits) {
  if (vocab_size_ < 2) throw ValidationError("ngram predictor: vocab_size must be >= 2");
  if (!(smoothing_ > 0.0) || !std::isfinite(smoothing_))
    throw ValidationError("ngram predictor: smoothing must be > 0");
  if (count_bits_ < 1 || count_bits_ > 64) throw ValidationError("ngram predictor: count_bits must be in [1, 64]");
  std::size_t contexts = 1;
  for (unsigned i = 0; i < order_; ++i) {
    if (contexts > kMaxCells / vocab_size_ / vocab_size_)
      throw ValidationError("ngram predictor: dense table |V|^(k+1) exceeds 2^28 cells");
    contexts *= vocab_size_;
  }
  counts_.assign(contexts * vocab_size_, 0);
  totals_.assign(contexts, 0);
}

NGramModel NGramModel::from_counts(std::uint32_t vocab_size, unsigned order, double smoothing, unsigned count_bits,
                                   std::vector<std::uint64_t> counts) {
  NGramModel m(vocab_size, order, smoothing, count_bits);
  if (counts.size() != m.counts_.size()) throw ValidationError("ngram predictor: count table has wrong size");
  m.counts_ = std::move(counts);
  for (std::size_t c = 0; c < m.totals_.size(); ++c) {
    std::uint64_t t = 0;
    for (std::uint32_t j = 0; j < vocab_size; ++j) t += m.counts_[c * vocab_size + j];
    m.totals_[c] = t;
  }
  return m;
}

std::size_t NGramModel::context_index(std::span<const Token> history) const {
  std::size_t idx = 0;
  const std::size_t have = std::min<std::size_t>(history.size(), order_);
  // Left padding with token 0 leaves the leading digits at zero.
  for (Token t : history.last(have)) {
    if (t >= vocab_size_)
      throw ValidationError("predict: context token " + std::to_string(t) + " outside vocabulary");
    idx = idx * vocab_size_ + t;
  }
  return idx;
}

void NGramModel::predict(std::span<const Token> history, std::span<double> out) const {
  const std::size_t ctx = context_index(history);
  const double denom = static_cast<double>(totals_[ctx]) + smoothing_ * vocab_size_;
  const std::uint64_t* row = counts_.data() + ctx * vocab_size_;
  for (std::uint32_t j = 0; j < vocab_size_; ++j) out[j] = (static_cast<double>(row[j]) + smoothing_) / denom;
}

double NGramModel::cross_entropy_nats(std::span<const Token> history, Token next) const {
  const std::size_t ctx = context_index(history);
  return std::log(static_cast<double>(totals_[ctx]) + smoothing_ * vocab_size_) -
         std::log(static_cast<double>(counts_[ctx * vocab_size_ + next]) + smoothing_);
}

void NGramModel::update(std::span<const Token> history, Token next) {
  const std::size_t ctx = context_index(history);
  std::uint64_t& cell = counts_[ctx * vocab_size_ + next];
  if (cell < width_max(count_bits_)) {
    ++cell;
    ++totals_[ctx];
  }
}

std::uint64_t NGramModel::param_bits() const { return static_cast<std::uint64_t>(counts_.size()) * count_bits_; }

std::uint64_t NGramModel::count(std::span<const Token> context, Token next) const {
  return counts_[context_index(context) * vocab_size_ + next];
}

std::uint64_t NGramModel::max_count() const {
  return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
}

NGramModel NGramModel::requantized(unsigned bits) const {
  if (bits < 1 || bits > 64) throw ValidationError("ngram quantization: width must be in [1, 64]");
  const std::uint64_t limit = width_max(bits);
  const std::uint64_t peak = max_count();
  std::vector<std::uint64_t> scaled = counts_;
  if (peak > limit) {
    const double factor = static_cast<double>(limit) / static_cast<double>(peak);
    for (auto& c : scaled) c = std::min<std::uint64_t>(limit, static_cast<std::uint64_t>(std::llround(c * factor)));
  }
  return from_counts(vocab_size_, order_, smoothing_, bits, std::move(scaled));
}

}  // namespace iclab
