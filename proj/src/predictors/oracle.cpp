// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "iclab/error.hpp"
#include "iclab/predictors.hpp"

namespace iclab {

OracleModel::OracleModel(Source source, double epsilon) : source_(std::move(source)), epsilon_(epsilon) {
  if (source_.vocab_size() < 2) throw ValidationError("oracle predictor: vocab_size must be >= 2");
  if (!(epsilon_ > 0.0 && epsilon_ < 1.0)) throw ValidationError("oracle predictor: epsilon must be in (0, 1)");
}

void OracleModel::predict(std::span<const Token> history, std::span<double> out) const {
  const std::size_t window = std::min<std::size_t>(history.size(), source_.order());
  for (Token t : history.last(window))
    if (t >= vocab_size()) throw ValidationError("predict: context token " + std::to_string(t) + " outside vocabulary");
  source_.conditional(history, out);
  const double floor = epsilon_ / static_cast<double>(out.size());
  for (double& v : out) v = (1.0 - epsilon_) * v + floor;
}

double OracleModel::cross_entropy_nats(std::span<const Token> history, Token next) const {
  std::vector<double> p(vocab_size());
  predict(history, p);
  return -std::log(p[next]);
}

}  // namespace iclab
