// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "iclab/error.hpp"
#include "iclab/predictors.hpp"
#include "iclab/units.hpp"

namespace iclab {

std::string to_string(UpdateMode mode) { return mode == UpdateMode::Online ? "online" : "frozen"; }

UpdateMode parse_update_mode(std::string_view s) {
  if (s == "online") return UpdateMode::Online;
  if (s == "frozen") return UpdateMode::Frozen;
  throw ValidationError("unknown mode '" + std::string(s) + "' (expected online|frozen)");
}

std::string to_string(Predictor::Kind kind) {
  switch (kind) {
    case Predictor::Kind::Uniform:
      return "uniform";
    case Predictor::Kind::NGram:
      return "ngram";
    case Predictor::Kind::TinyLm:
      return "tinylm";
    case Predictor::Kind::Oracle:
      return "oracle";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

UniformModel::UniformModel(std::uint32_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size < 2) throw ValidationError("uniform predictor: vocab_size must be >= 2");
}

void UniformModel::predict(std::span<const Token>, std::span<double> out) const {
  const double p = 1.0 / static_cast<double>(vocab_size_);
  for (double& v : out) v = p;
}

double UniformModel::cross_entropy_nats(std::span<const Token>, Token) const {
  return std::log(static_cast<double>(vocab_size_));
}

// ---------------------------------------------------------------------------

Predictor Predictor::uniform(std::uint32_t vocab_size) { return Predictor(UniformModel(vocab_size)); }

Predictor Predictor::ngram(std::uint32_t vocab_size, unsigned order, double smoothing, unsigned count_bits) {
  return Predictor(NGramModel(vocab_size, order, smoothing, count_bits));
}

Predictor Predictor::tiny_lm(const TinyLmConfig& config) { return Predictor(TinyLm(config)); }

Predictor Predictor::oracle(Source source) { return Predictor(OracleModel(std::move(source))); }

std::uint32_t Predictor::vocab_size() const {
  return std::visit([](const auto& m) { return m.vocab_size(); }, model_);
}

std::vector<double> Predictor::predict(std::span<const Token> history) const {
  std::vector<double> out(vocab_size());
  predict(history, out);
  return out;
}

void Predictor::predict(std::span<const Token> history, std::span<double> out) const {
  if (out.size() != vocab_size()) throw ValidationError("predict: output size does not match vocabulary");
  std::visit([&](const auto& m) { m.predict(history, out); }, model_);
}

void Predictor::update(std::span<const Token> history, Token next) {
  if (next >= vocab_size())
    throw ValidationError("update: token " + std::to_string(next) + " outside vocabulary");
  std::visit([&](auto& m) { m.update(history, next); }, model_);
}

double Predictor::cross_entropy_bits(std::span<const Token> history, Token next) const {
  if (next >= vocab_size())
    throw ValidationError("cross_entropy: token " + std::to_string(next) + " outside vocabulary");
  return nats_to_bits(std::visit([&](const auto& m) { return m.cross_entropy_nats(history, next); }, model_));
}

std::uint64_t Predictor::param_bits() const {
  return std::visit([](const auto& m) { return m.param_bits(); }, model_);
}

double average_cross_entropy(Predictor predictor, const TokenStream& stream, UpdateMode mode) {
  if (stream.empty()) return 0.0;
  if (stream.vocab_size != predictor.vocab_size())
    throw ValidationError("average_cross_entropy: stream and predictor vocabularies differ");
  const std::span<const Token> all(stream.tokens);
  // Accumulate in nats and convert once.
  double total_nats = 0.0;
  for (std::size_t t = 0; t < all.size(); ++t) {
    const auto history = all.first(t);
    total_nats += std::visit([&](const auto& m) { return m.cross_entropy_nats(history, all[t]); }, predictor.model());
    if (mode == UpdateMode::Online) predictor.update(history, all[t]);
  }
  return nats_to_bits(total_nats) / static_cast<double>(all.size());
}

void train(Predictor& predictor, const TokenStream& stream, std::size_t epochs) {
  if (stream.vocab_size != predictor.vocab_size())
    throw ValidationError("train: stream and predictor vocabularies differ");
  const std::span<const Token> all(stream.tokens);
  for (std::size_t e = 0; e < epochs; ++e)
    for (std::size_t t = 0; t < all.size(); ++t) predictor.update(all.first(t), all[t]);
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t Predictor::checkpoint_hash() const { return fnv1a64(checkpoint()); }

}  // namespace iclab
