#pragma once

// SPDX-License-Identifier: Apache-2.0

// Synthetic token sources with closed-form entropy rates, the token stream
// type, and entropy estimators.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iclab {

using Token = std::uint32_t;

/// A finite token sequence over [0, vocab_size).
struct TokenStream {
  std::uint32_t vocab_size = 0;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  /// Throws ValidationError if vocab_size is 0 or any token is out of range.
  void validate() const;

  friend bool operator==(const TokenStream&, const TokenStream&) = default;
};

/// Probability vectors must sum to 1 within this tolerance.
inline constexpr double kProbabilitySumTolerance = 1e-12;

/// Contexts of a Markov source are keyed oldest token first.
using Context = std::vector<Token>;
using TransitionMap = std::map<Context, std::vector<double>>;

class MarkovChain;

/// A generative token source. Immutable after construction and safe to share
/// across threads.
class Source {
 public:
  enum class Kind { Iid, Markov, Deterministic };

  static Source iid(std::vector<double> probabilities);
  static Source markov(std::uint32_t vocab_size, unsigned order, TransitionMap transitions);
  static Source deterministic(std::uint32_t vocab_size, std::vector<Token> cycle);

  /// IID uniform over vocab_size symbols.
  static Source uniform(std::uint32_t vocab_size);
  /// Binary order-1 chain that repeats the previous symbol with probability `stay`.
  static Source binary_sticky(double stay);

  Kind kind() const { return kind_; }
  std::uint32_t vocab_size() const { return vocab_size_; }
  /// Markov order; 0 for IID and deterministic sources.
  unsigned order() const;

  const std::vector<double>& probabilities() const;  // Iid only
  const TransitionMap& transitions() const;          // Markov only
  const std::vector<Token>& cycle() const;           // Deterministic only
  const MarkovChain& chain() const;                  // Markov only

  /// True next-token distribution P(x_{t+1} | history). Markov histories
  /// shorter than the order are resolved against the stationary start
  /// distribution; unknown contexts yield the uniform vector.
  void conditional(std::span<const Token> history, std::span<double> out) const;

 private:
  Source() = default;

  Kind kind_ = Kind::Iid;
  std::uint32_t vocab_size_ = 0;
  std::vector<double> probabilities_;
  std::vector<Token> cycle_;
  std::shared_ptr<const MarkovChain> chain_;
};

/// Dense view of an order-k chain: contexts are indexed base-|V| with the
/// oldest token most significant.
class MarkovChain {
 public:
  MarkovChain(std::uint32_t vocab_size, unsigned order, TransitionMap transitions);

  std::uint32_t vocab_size() const { return vocab_size_; }
  unsigned order() const { return order_; }
  std::size_t context_count() const { return context_count_; }
  const TransitionMap& transitions() const { return transitions_; }

  bool defined(std::size_t context) const { return defined_[context] != 0; }
  std::span<const double> row(std::size_t context) const {
    return {table_.data() + context * vocab_size_, vocab_size_};
  }
  std::size_t successor(std::size_t context, Token next) const {
    return (context * vocab_size_ + next) % context_count_;
  }
  std::size_t index_of(std::span<const Token> context) const;
  Context tokens_of(std::size_t index) const;

  /// Stationary distribution over all context indices (zero off the
  /// recurrent class). Computed on first use; throws ValidationError if the
  /// chain has more than one closed class.
  const std::vector<double>& stationary() const;

 private:
  std::vector<double> solve_stationary() const;

  std::uint32_t vocab_size_;
  unsigned order_;
  std::size_t context_count_;
  TransitionMap transitions_;
  std::vector<double> table_;
  std::vector<std::uint8_t> defined_;

  mutable std::once_flag stationary_once_;
  mutable std::vector<double> stationary_;
  mutable std::optional<std::string> stationary_error_;
};

/// Contexts up to this many states are solved directly; larger ones by power
/// iteration.
inline constexpr std::size_t kDirectSolveLimit = 4096;

struct EntropyEstimate {
  enum class Method { Exact, Plugin, InitialLoss };

  double value = 0.0;  ///< bits per token
  Method method = Method::Exact;
  /// Plug-in order or initial-loss window; 0 for exact.
  std::size_t parameter = 0;
  std::optional<double> standard_error;
};

std::string to_string(EntropyEstimate::Method m);

/// Draws `length` tokens. Pure in (source, length, seed).
TokenStream sample_stream(const Source& source, std::size_t length, std::uint64_t seed);

/// Entropy rate in bits/token.
EntropyEstimate exact_entropy_rate(const Source& source);

/// Empirical conditional entropy of the given order, in bits/token.
EntropyEstimate plugin_entropy(const TokenStream& stream, std::size_t order);

}  // namespace iclab
