#pragma once

// SPDX-License-Identifier: Apache-2.0

// Autoregressive next-token predictors with online updates and parameter-size
// accounting in bits.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "iclab/sources.hpp"

namespace iclab {

enum class UpdateMode { Frozen, Online };

std::string to_string(UpdateMode mode);
UpdateMode parse_update_mode(std::string_view s);

/// Maximum-entropy predictor; stores nothing.
class UniformModel {
 public:
  explicit UniformModel(std::uint32_t vocab_size);

  std::uint32_t vocab_size() const { return vocab_size_; }
  void predict(std::span<const Token> history, std::span<double> out) const;
  double cross_entropy_nats(std::span<const Token> history, Token next) const;
  void update(std::span<const Token>, Token) {}
  std::uint64_t param_bits() const { return 0; }

  friend bool operator==(const UniformModel&, const UniformModel&) = default;

 private:
  std::uint32_t vocab_size_;
};

/// Additively smoothed order-k count model over a dense |V|^k x |V| table.
/// Histories shorter than k are left-padded with token 0.
class NGramModel {
 public:
  NGramModel(std::uint32_t vocab_size, unsigned order, double smoothing, unsigned count_bits = 32);

  std::uint32_t vocab_size() const { return vocab_size_; }
  unsigned order() const { return order_; }
  double smoothing() const { return smoothing_; }
  unsigned count_bits() const { return count_bits_; }
  std::size_t context_count() const { return totals_.size(); }
  std::size_t cell_count() const { return counts_.size(); }

  /// P(j | ctx) = (n(ctx, j) + alpha) / (n(ctx) + alpha |V|)
  void predict(std::span<const Token> history, std::span<double> out) const;
  /// log(n(ctx) + alpha |V|) - log(n(ctx, next) + alpha), straight from counts.
  double cross_entropy_nats(std::span<const Token> history, Token next) const;
  /// Increments exactly one cell (saturating at 2^count_bits - 1).
  void update(std::span<const Token> history, Token next);
  /// Allocated cells x count width; independent of what has been observed.
  std::uint64_t param_bits() const;

  std::size_t context_index(std::span<const Token> history) const;
  std::uint64_t count(std::span<const Token> context, Token next) const;
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::uint64_t max_count() const;

  /// Rescales all counts by (2^bits - 1) / max_count with round-to-nearest
  /// (identity when every count already fits) and sets the count width.
  NGramModel requantized(unsigned bits) const;

  /// Rebuilds a model from serialized counts.
  static NGramModel from_counts(std::uint32_t vocab_size, unsigned order, double smoothing,
                                unsigned count_bits, std::vector<std::uint64_t> counts);

  friend bool operator==(const NGramModel&, const NGramModel&) = default;

 private:
  std::uint32_t vocab_size_;
  unsigned order_;
  double smoothing_;
  unsigned count_bits_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> totals_;
};

struct TinyLmConfig {
  std::uint32_t vocab_size = 2;
  unsigned context_len = 1;
  unsigned hidden_width = 8;
  unsigned bit_width = 32;      ///< numeric format width b used for N
  double learning_rate = 0.05;  ///< plain SGD step size
  std::uint64_t seed = 0;

  friend bool operator==(const TinyLmConfig&, const TinyLmConfig&) = default;
};

/// One-hidden-layer softmax model: the previous context_len tokens are
/// one-hot encoded by position, fed through a tanh layer of hidden_width
/// units and a linear readout over the vocabulary. Missing positions at the
/// start of a stream contribute nothing.
class TinyLm {
 public:
  /// A contiguous parameter tensor inside the flat parameter vector.
  struct Block {
    const char* name;
    std::size_t offset;
    std::size_t size;
  };

  explicit TinyLm(const TinyLmConfig& config);
  TinyLm(const TinyLmConfig& config, std::vector<double> parameters);

  const TinyLmConfig& config() const { return config_; }
  std::uint32_t vocab_size() const { return config_.vocab_size; }

  void predict(std::span<const Token> history, std::span<double> out) const;
  /// log-sum-exp of the logits minus the target logit.
  double cross_entropy_nats(std::span<const Token> history, Token next) const;
  /// One SGD step on the cross-entropy of (history, next).
  void update(std::span<const Token> history, Token next);
  std::uint64_t param_bits() const { return parameter_count() * config_.bit_width; }

  std::size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  /// Input weights, hidden bias, output weights, output bias.
  std::vector<Block> blocks() const;

  /// d(cross-entropy in nats)/d(parameters) at (history, next).
  std::vector<double> gradient(std::span<const Token> history, Token next) const;

  /// Sets the numeric width used for accounting (after quantization).
  void set_bit_width(unsigned bits) { config_.bit_width = bits; }

  friend bool operator==(const TinyLm&, const TinyLm&) = default;

 private:
  struct Activations {
    std::vector<std::size_t> rows;  // active input rows of the input matrix
    std::vector<double> hidden;     // tanh outputs
    std::vector<double> logits;
  };
  Activations forward(std::span<const Token> history) const;

  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return input_rows() * config_.hidden_width; }
  std::size_t w2_offset() const { return b1_offset() + config_.hidden_width; }
  std::size_t b2_offset() const { return w2_offset() + std::size_t{config_.vocab_size} * config_.hidden_width; }
  std::size_t input_rows() const { return std::size_t{config_.context_len} * config_.vocab_size; }

  TinyLmConfig config_;
  std::vector<double> params_;
};

/// Lab baseline that predicts with the generating source's true conditional,
/// mixed with epsilon of the uniform vector so every symbol stays codable.
class OracleModel {
 public:
  explicit OracleModel(Source source, double epsilon = 1e-12);

  std::uint32_t vocab_size() const { return source_.vocab_size(); }
  const Source& source() const { return source_; }
  double epsilon() const { return epsilon_; }
  void predict(std::span<const Token> history, std::span<double> out) const;
  double cross_entropy_nats(std::span<const Token> history, Token next) const;
  void update(std::span<const Token>, Token) {}
  std::uint64_t param_bits() const { return 0; }

 private:
  Source source_;
  double epsilon_;
};

/// Value-semantic predictor: copying yields an independent model with the
/// same state, which is how encoder and decoder share a codebook.
class Predictor {
 public:
  enum class Kind : std::uint8_t { Uniform = 0, NGram = 1, TinyLm = 2, Oracle = 3 };
  using Model = std::variant<UniformModel, NGramModel, TinyLm, OracleModel>;

  static Predictor uniform(std::uint32_t vocab_size);
  static Predictor ngram(std::uint32_t vocab_size, unsigned order, double smoothing = 0.5,
                         unsigned count_bits = 32);
  static Predictor tiny_lm(const TinyLmConfig& config);
  static Predictor oracle(Source source);

  explicit Predictor(Model model) : model_(std::move(model)) {}

  Kind kind() const { return static_cast<Kind>(model_.index()); }
  std::uint32_t vocab_size() const;

  /// Strictly positive distribution over the vocabulary, summing to 1.
  std::vector<double> predict(std::span<const Token> history) const;
  void predict(std::span<const Token> history, std::span<double> out) const;
  void update(std::span<const Token> history, Token next);
  /// -log2 P(next | history) computed from the model's own internals rather
  /// than from predict().
  double cross_entropy_bits(std::span<const Token> history, Token next) const;
  std::uint64_t param_bits() const;

  const Model& model() const { return model_; }
  Model& model() { return model_; }

  /// Binary checkpoint; identical state gives identical bytes.
  std::vector<std::uint8_t> checkpoint() const;
  static Predictor from_checkpoint(std::span<const std::uint8_t> bytes);
  /// 64-bit FNV-1a of checkpoint().
  std::uint64_t checkpoint_hash() const;

 private:
  Model model_;
};

std::string to_string(Predictor::Kind kind);

/// Average cross-entropy in bits/token over the stream, computed through
/// Predictor::cross_entropy_bits. Works on a copy; Online mode updates it
/// after every token.
double average_cross_entropy(Predictor predictor, const TokenStream& stream, UpdateMode mode);

/// Trains in place by calling update() over the stream `epochs` times.
void train(Predictor& predictor, const TokenStream& stream, std::size_t epochs = 1);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace iclab
