// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "iclab/error.hpp"
#include "iclab/kernels.hpp"
#include "iclab/predictors.hpp"
#include "iclab/rng.hpp"

namespace iclab {
namespace {

void check_config(const TinyLmConfig& c) {
  if (c.vocab_size < 2) throw ValidationError("tinylm: vocab_size must be >= 2");
  if (c.context_len < 1 || c.hidden_width < 1) throw ValidationError("tinylm: dimensions must be >= 1");
  if (c.bit_width < 1 || c.bit_width > 64) throw ValidationError("tinylm: bit_width must be in [1, 64]");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate))
    throw ValidationError("tinylm: learning_rate must be > 0");
}

std::size_t count_for(const TinyLmConfig& c) {
  const std::size_t h = c.hidden_width, v = c.vocab_size;
  return std::size_t{c.context_len} * v * h + h + v * h + v;
}

// Softmax in place; returns log of the normalizer relative to the max logit.
double softmax_inplace(std::span<double> z) {
  const double m = kernels::max(z);
  for (double& v : z) v = std::exp(v - m);
  const double s = kernels::sum(z);
  const double inv = 1.0 / s;
  for (double& v : z) v *= inv;
  return std::log(s);
}

}  // namespace

TinyLm::TinyLm(const TinyLmConfig& config) : config_(config) {
  check_config(config_);
  params_.assign(count_for(config_), 0.0);
  Rng rng(config_.seed);
  // Small uniform init keeps the initial distribution close to uniform.
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(config_.context_len));
  const double out_scale = 0.1 / std::sqrt(static_cast<double>(config_.hidden_width));
  for (std::size_t i = w1_offset(); i < b1_offset(); ++i) params_[i] = rng.uniform(-in_scale, in_scale);
  for (std::size_t i = w2_offset(); i < b2_offset(); ++i) params_[i] = rng.uniform(-out_scale, out_scale);
}

TinyLm::TinyLm(const TinyLmConfig& config, std::vector<double> parameters)
    : config_(config), params_(std::move(parameters)) {
  check_config(config_);
  if (params_.size() != count_for(config_)) throw ValidationError("tinylm: parameter vector has wrong size");
}

std::vector<TinyLm::Block> TinyLm::blocks() const {
  return {{"input_weights", w1_offset(), b1_offset() - w1_offset()},
          {"hidden_bias", b1_offset(), config_.hidden_width},
          {"output_weights", w2_offset(), b2_offset() - w2_offset()},
          {"output_bias", b2_offset(), config_.vocab_size}};
}

TinyLm::Activations TinyLm::forward(std::span<const Token> history) const {
  const std::size_t h = config_.hidden_width, v = config_.vocab_size, c = config_.context_len;
  Activations act;
  act.hidden.assign(params_.begin() + static_cast<std::ptrdiff_t>(b1_offset()),
                    params_.begin() + static_cast<std::ptrdiff_t>(b1_offset() + h));
  // Position p holds the token p steps before the most recent, left-aligned so
  // that position c-1 is always the latest token.
  const std::size_t have = std::min<std::size_t>(history.size(), c);
  const auto window = history.last(have);
  for (std::size_t i = 0; i < have; ++i) {
    const Token t = window[i];
    if (t >= v) throw ValidationError("predict: context token " + std::to_string(t) + " outside vocabulary");
    const std::size_t pos = c - have + i;
    const std::size_t row = pos * v + t;
    act.rows.push_back(row);
    kernels::axpy(1.0, std::span<const double>(params_).subspan(w1_offset() + row * h, h), act.hidden);
  }
  for (double& a : act.hidden) a = std::tanh(a);
  act.logits.resize(v);
  kernels::gemv_bias(std::span<const double>(params_).subspan(w2_offset(), v * h),
                     std::span<const double>(params_).subspan(b2_offset(), v), act.hidden, act.logits);
  return act;
}

void TinyLm::predict(std::span<const Token> history, std::span<double> out) const {
  Activations act = forward(history);
  softmax_inplace(act.logits);
  std::copy(act.logits.begin(), act.logits.end(), out.begin());
}

double TinyLm::cross_entropy_nats(std::span<const Token> history, Token next) const {
  const Activations act = forward(history);
  const double m = *std::max_element(act.logits.begin(), act.logits.end());
  double s = 0.0;
  for (double z : act.logits) s += std::exp(z - m);
  return std::log(s) + m - act.logits[next];
}

std::vector<double> TinyLm::gradient(std::span<const Token> history, Token next) const {
  const std::size_t h = config_.hidden_width, v = config_.vocab_size;
  Activations act = forward(history);
  std::vector<double> dz = act.logits;
  softmax_inplace(dz);
  dz[next] -= 1.0;

  std::vector<double> grad(params_.size(), 0.0);
  std::vector<double> da(h, 0.0);
  const std::span<const double> w2 = std::span<const double>(params_).subspan(w2_offset(), v * h);
  for (std::size_t r = 0; r < v; ++r) {
    kernels::axpy(dz[r], act.hidden, std::span<double>(grad).subspan(w2_offset() + r * h, h));
    kernels::axpy(dz[r], w2.subspan(r * h, h), da);
    grad[b2_offset() + r] = dz[r];
  }
  for (std::size_t j = 0; j < h; ++j) {
    const double dh = da[j] * (1.0 - act.hidden[j] * act.hidden[j]);
    grad[b1_offset() + j] = dh;
    for (std::size_t row : act.rows) grad[w1_offset() + row * h + j] = dh;
  }
  return grad;
}

void TinyLm::update(std::span<const Token> history, Token next) {
  const std::size_t h = config_.hidden_width, v = config_.vocab_size;
  const double lr = config_.learning_rate;
  Activations act = forward(history);
  std::vector<double> dz = act.logits;
  softmax_inplace(dz);
  dz[next] -= 1.0;

  // Hidden gradient uses the output weights before this step's change.
  std::vector<double> da(h, 0.0);
  const std::span<double> all(params_);
  for (std::size_t r = 0; r < v; ++r) {
    const std::span<double> w2_row = all.subspan(w2_offset() + r * h, h);
    kernels::axpy(dz[r], w2_row, da);
    kernels::axpy(-lr * dz[r], act.hidden, w2_row);
    all[b2_offset() + r] -= lr * dz[r];
  }
  for (std::size_t j = 0; j < h; ++j) da[j] *= 1.0 - act.hidden[j] * act.hidden[j];
  kernels::axpy(-lr, da, all.subspan(b1_offset(), h));
  for (std::size_t row : act.rows) kernels::axpy(-lr, da, all.subspan(w1_offset() + row * h, h));
}

}  // namespace iclab
