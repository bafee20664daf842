// SPDX-License-Identifier: Apache-2.0

#include "iclab/quantlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "iclab/error.hpp"

namespace iclab::quantlab {
namespace {

void quantize_block(std::span<double> w, unsigned bits) {
  double peak = 0.0;
  for (double v : w) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return;
  const double cells = std::ldexp(1.0, static_cast<int>(bits));
  const double step = 2.0 * peak / cells;
  for (double& v : w) {
    const double idx = std::clamp(std::floor((v + peak) / step), 0.0, cells - 1.0);
    v = -peak + (idx + 0.5) * step;
  }
}

}  // namespace

unsigned source_bit_width(const Predictor& predictor) {
  if (const auto* t = std::get_if<TinyLm>(&predictor.model())) return t->config().bit_width;
  if (const auto* n = std::get_if<NGramModel>(&predictor.model())) return n->count_bits();
  throw ValidationError("quantize: " + to_string(predictor.kind()) + " predictor has no quantizable parameters");
}

Predictor quantize_predictor(const Predictor& predictor, unsigned target_bits) {
  if (target_bits < 1) throw ValidationError("quantize: target width must be >= 1");
  const unsigned b = source_bit_width(predictor);
  if (const auto* n = std::get_if<NGramModel>(&predictor.model())) return Predictor(n->requantized(target_bits));
  TinyLm t = std::get<TinyLm>(predictor.model());
  if (target_bits < b) {
    for (const auto& blk : t.blocks()) quantize_block(t.parameters().subspan(blk.offset, blk.size), target_bits);
    t.set_bit_width(target_bits);
  }
  return Predictor(std::move(t));
}

ICState experiment_state(const QuantizationExperiment& experiment) {
  if (!experiment.checkpoint) throw ValidationError("degradation_experiment: missing checkpoint");
  ICState s;
  s.tokens = experiment.tokens.value_or(static_cast<double>(experiment.eval_stream.size()));
  s.entropy = experiment.entropy;
  s.loss = BitsPerToken(average_cross_entropy(*experiment.checkpoint, experiment.eval_stream, UpdateMode::Frozen));
  s.param_bits = static_cast<double>(experiment.checkpoint->param_bits());
  return s;
}

std::vector<QuantizationResult> degradation_experiment(const QuantizationExperiment& experiment) {
  if (!experiment.checkpoint) throw ValidationError("degradation_experiment: missing checkpoint");
  if (experiment.eval_stream.empty()) throw ValidationError("degradation_experiment: evaluation stream is empty");
  if (experiment.target_widths.empty()) throw ValidationError("degradation_experiment: no target widths");
  const Predictor& base = *experiment.checkpoint;
  const unsigned b = source_bit_width(base);
  const ICState state = experiment_state(experiment);
  const auto eta_before = state.eta();
  if (!eta_before) throw ValidationError("degradation_experiment: checkpoint has N = 0");

  std::vector<QuantizationResult> out;
  for (unsigned target : experiment.target_widths) {
    const Predictor q = quantize_predictor(base, target);
    QuantizationResult r;
    r.checkpoint = experiment.checkpoint_id;
    r.bit_width = b;
    r.target_bit_width = target;
    r.loss_before = state.loss.value;
    r.loss_after = average_cross_entropy(q, experiment.eval_stream, UpdateMode::Frozen);
    r.eta_before = *eta_before;
    r.eta_times_b = *eta_before * b;
    r.param_bits_before = base.param_bits();
    r.param_bits_after = q.param_bits();
    r.eta_after = information_capacity(state.tokens, state.entropy, BitsPerToken(r.loss_after),
                                       static_cast<double>(r.param_bits_after));
    QuantizationSpec spec{b, target, std::max(0.0, r.eta_before), std::nullopt};
    if (r.eta_after >= 0.0 && r.eta_after <= 1.0) spec.eta_after = r.eta_after;
    const QuantizationVerdict v = quantization_condition(spec);
    r.condition_pass = r.eta_times_b <= static_cast<double>(target);
    r.full_condition_pass = v.full_holds;
    r.degraded = r.loss_after - r.loss_before > experiment.tolerance;
    out.push_back(r);
  }
  return out;
}

std::vector<MatrixCell> run_standard_matrix(const StandardMatrixConfig& config) {
  const TokenStream stream = sample_stream(Source::uniform(config.vocab_size), config.stream_length, config.stream_seed);
  TinyLmConfig model = config.model;
  model.vocab_size = config.vocab_size;
  Predictor predictor = Predictor::tiny_lm(model);
  std::vector<std::size_t> schedule = config.epochs;
  std::sort(schedule.begin(), schedule.end());

  std::vector<MatrixCell> cells;
  std::size_t trained = 0;
  for (std::size_t epochs : schedule) {
    train(predictor, stream, epochs - trained);
    trained = epochs;
    QuantizationExperiment exp;
    exp.checkpoint_id = "tinylm-epochs-" + std::to_string(epochs);
    exp.checkpoint = predictor;
    exp.target_widths = config.target_widths;
    exp.eval_stream = stream;
    exp.entropy = BitsPerToken(std::log2(static_cast<double>(config.vocab_size)));
    exp.tolerance = config.tolerance;
    for (auto& r : degradation_experiment(exp)) cells.push_back({epochs, std::move(r)});
  }
  return cells;
}

std::vector<std::pair<std::size_t, double>> max_undegraded_ratio(const std::vector<MatrixCell>& cells) {
  std::map<std::size_t, double> best;
  for (const auto& c : cells) {
    double& slot = best[c.epochs];
    if (!c.result.degraded)
      slot = std::max(slot, static_cast<double>(c.result.bit_width) / c.result.target_bit_width);
  }
  return {best.begin(), best.end()};
}

StandardMatrixConfig standard_matrix_from_json(const json& doc) {
  static const std::set<std::string> keys{"vocab_size",   "stream_length", "stream_seed", "context_len",
                                          "hidden_width", "bit_width",     "learning_rate", "model_seed",
                                          "epochs",       "target_widths", "tolerance"};
  if (!doc.is_object()) throw ValidationError("quantlab config must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!keys.contains(key)) throw ValidationError("quantlab config: unknown key '" + key + "'");
  StandardMatrixConfig c;
  try {
    c.vocab_size = doc.value("vocab_size", c.vocab_size);
    c.stream_length = doc.value("stream_length", c.stream_length);
    c.stream_seed = doc.value("stream_seed", c.stream_seed);
    c.model.context_len = doc.value("context_len", c.model.context_len);
    c.model.hidden_width = doc.value("hidden_width", c.model.hidden_width);
    c.model.bit_width = doc.value("bit_width", c.model.bit_width);
    c.model.learning_rate = doc.value("learning_rate", c.model.learning_rate);
    c.model.seed = doc.value("model_seed", c.model.seed);
    c.epochs = doc.value("epochs", c.epochs);
    c.target_widths = doc.value("target_widths", c.target_widths);
    c.tolerance = doc.value("tolerance", c.tolerance);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("quantlab config: ") + e.what());
  }
  if (c.epochs.empty() || c.target_widths.empty()) throw ValidationError("quantlab config: empty sweep");
  for (std::size_t e : c.epochs)
    if (e == 0) throw ValidationError("quantlab config: epochs must be >= 1");
  if (c.stream_length == 0) throw ValidationError("quantlab config: stream_length must be >= 1");
  return c;
}

json to_json(const QuantizationResult& r) {
  json j{{"checkpoint", r.checkpoint},
         {"bit_width", r.bit_width},
         {"target_bit_width", r.target_bit_width},
         {"loss_before", r.loss_before},
         {"loss_after", r.loss_after},
         {"eta_before", r.eta_before},
         {"eta_times_b", r.eta_times_b},
         {"eta_after", r.eta_after},
         {"condition_pass", r.condition_pass},
         {"degraded", r.degraded},
         {"param_bits_before", r.param_bits_before},
         {"param_bits_after", r.param_bits_after}};
  j["full_condition_pass"] = r.full_condition_pass ? json(*r.full_condition_pass) : json(nullptr);
  return j;
}

void append_results_jsonl(const std::filesystem::path& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open " + path.string());
  for (const auto& r : records) out << r.dump() << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace iclab::quantlab
