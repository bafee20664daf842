// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <set>

#include "iclab/codec.hpp"
#include "iclab/quantlab.hpp"
#include "iclab/telemetry.hpp"

namespace iclab::telemetry {
namespace {

const std::set<std::string> kConfigKeys{"source", "log", "predictor", "mode", "length", "seed",
                                        "pretrain_epochs", "temperature", "initial_loss_window",
                                        "entropy_bits", "param_bits", "bit_width",
                                        "quantization_targets", "outputs"};

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const ValidationError& e) {
    throw StageError(name, e.what());
  } catch (const json::exception& e) {
    throw StageError(name, e.what());
  }
}

Quantity q(double v, const char* unit) { return Quantity{v, unit}; }

EntropyEntry entry(const EntropyEstimate& e) {
  EntropyEntry out;
  out.method = to_string(e.method);
  out.value = q(e.value, "bits/token");
  if (e.method == EntropyEstimate::Method::Plugin) out.parameter = q(static_cast<double>(e.parameter), "order");
  if (e.method == EntropyEstimate::Method::InitialLoss)
    out.parameter = q(static_cast<double>(e.parameter), "records");
  if (e.standard_error) out.standard_error = q(*e.standard_error, "bits/token");
  return out;
}

void add_flags(std::vector<std::string>& out, const FlagSet& flags) {
  for (Flag f : flags.flags) {
    const std::string s = to_string(f);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
}

CapacityBlock capacity_block(const char* baseline, const ICState& s, double temperature) {
  CapacityBlock b;
  b.baseline = baseline;
  b.entropy = q(s.entropy.value, "bits/token");
  const double info = s.effective_info();
  b.effective_info = q(info, "bits");
  if (auto eta = s.eta())
    b.eta = q(*eta, "bits/bit");
  else
    b.no_capacity = true;
  if (info >= 0.0) b.energy = q(landauer_bound(info, {.temperature = temperature}), "J");
  return b;
}

std::vector<SeriesRow> series_rows(const TrainingTrace& trace, double entropy, double param_bits) {
  std::vector<SeriesRow> rows;
  for (const auto& r : trace.records) {
    SeriesRow row;
    row.tokens = r.tokens_seen;
    row.loss = r.loss;
    row.effective_info = effective_information(static_cast<double>(r.tokens_seen), BitsPerToken(entropy),
                                               BitsPerToken(r.loss));
    if (param_bits > 0.0) row.eta = row.effective_info / param_bits;
    rows.push_back(row);
  }
  return rows;
}

std::vector<VerdictRow> verdicts(unsigned b, const std::vector<unsigned>& targets, double eta) {
  std::vector<VerdictRow> out;
  for (unsigned t : targets) {
    const QuantizationVerdict v = quantization_condition({b, t, eta, std::nullopt});
    out.push_back({b, t, v.necessary_holds, v.necessary_margin});
  }
  return out;
}

void fill_common(ReportDocument& doc, const RunConfig& config, const ICState& state) {
  doc.dataset_quality = doc.entropy.value;
  doc.tokens = q(state.tokens, "tokens");
  doc.loss = q(state.loss.value, "bits/token");
  doc.param_bits = q(state.param_bits, "bits");
  doc.temperature = q(config.temperature, "K");
  doc.energy_per_bit = q(landauer_bound(1.0, {.temperature = config.temperature}), "J/bit");
  doc.terminal = capacity_block("entropy", state, config.temperature);
  add_flags(doc.flags, state.flags());
}

ReportDocument run_internal(const RunConfig& config) {
  ReportDocument doc;
  doc.provenance = "internal-run";
  doc.inputs = config.to_json();
  doc.inputs.erase("outputs");

  const Source source = stage("source", [&] { return source_from_json(*config.source); });
  const TokenStream stream = stage("sample", [&] { return sample_stream(source, config.length, config.seed); });
  Predictor predictor =
      stage("predictor", [&] { return predictor_from_json(config.predictor, source.vocab_size(), &source); });
  if (config.pretrain_epochs > 0) stage("train", [&] { train(predictor, stream, config.pretrain_epochs); });

  // Prequential trace straight from the predictor's own loss.
  TrainingTrace trace;
  double prequential_bits = 0.0;
  stage("trace", [&] {
    Predictor p = predictor;
    const auto schedule = checkpoint_schedule(stream.size());
    std::size_t next = 0;
    const std::span<const Token> toks = stream.tokens;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      prequential_bits += p.cross_entropy_bits(toks.first(t), toks[t]);
      if (config.mode == UpdateMode::Online) p.update(toks.first(t), toks[t]);
      if (next < schedule.size() && schedule[next] == t + 1) {
        trace.records.push_back({t + 1, prequential_bits / static_cast<double>(t + 1)});
        ++next;
      }
    }
  });

  // Codelength from the codec; this is the L that enters the report.
  const CodeReport code = stage("codec", [&] {
    Predictor p = predictor;
    return ideal_codelength(stream, p, config.mode);
  });
  const double d = static_cast<double>(stream.size());
  const double loss = code.ideal_bits / d;

  const EntropyEstimate exact = stage("entropy", [&] { return exact_entropy_rate(source); });
  const EntropyEstimate plugin = stage("entropy", [&] { return plugin_entropy(stream, source.order()); });
  const InitialLossEstimate initial = stage("entropy", [&] {
    return entropy_from_initial_loss(trace, config.initial_loss_window, BitsPerToken(exact.value));
  });
  doc.entropy = entry(exact);
  doc.entropy_estimates = {entry(exact), entry(plugin), entry(initial.estimate)};

  ICState state{d, BitsPerToken(exact.value), BitsPerToken(loss), static_cast<double>(predictor.param_bits())};
  fill_common(doc, config, state);
  add_flags(doc.flags, initial.flags);

  ICState uniform = state;
  uniform.entropy = BitsPerToken(std::log2(static_cast<double>(source.vocab_size())));
  doc.uniform_baseline = capacity_block("uniform", uniform, config.temperature);

  doc.conservation.checked = true;
  doc.conservation.note = "codec ideal codelength against prequential predictor loss";
  doc.conservation.ideal_bits = q(code.ideal_bits, "bits");
  doc.conservation.prequential_bits = q(prequential_bits, "bits");
  doc.conservation.difference = q(code.ideal_bits - prequential_bits, "bits");
  doc.conservation.holds = std::abs(loss - prequential_bits / d) <= kConservationTolerance;

  if (auto eta = state.eta(); eta && (predictor.kind() == Predictor::Kind::NGram ||
                                      predictor.kind() == Predictor::Kind::TinyLm))
    doc.quantization = stage("quantization", [&] {
      return verdicts(quantlab::source_bit_width(predictor), config.quantization_targets, *eta);
    });

  doc.series = series_rows(trace, exact.value, state.param_bits);
  return doc;
}

ReportDocument run_log(const RunConfig& config) {
  ReportDocument doc;
  doc.provenance = "external-telemetry";
  doc.inputs = config.to_json();
  doc.inputs.erase("outputs");

  const TrainingTrace trace = stage("log", [&] { return read_training_log(*config.log_path); });
  const TraceRecord& last = trace.records.back();
  const double d = static_cast<double>(last.tokens_seen);

  std::optional<BitsPerToken> known;
  if (config.entropy_bits) known = BitsPerToken(*config.entropy_bits);
  const InitialLossEstimate initial =
      stage("entropy", [&] { return entropy_from_initial_loss(trace, config.initial_loss_window, known); });
  if (known) {
    EntropyEntry user;
    user.method = "user";
    user.value = q(known->value, "bits/token");
    doc.entropy = user;
    doc.entropy_estimates = {user, entry(initial.estimate)};
  } else {
    doc.entropy = entry(initial.estimate);
    doc.entropy_estimates = {entry(initial.estimate)};
  }

  ICState state{d, BitsPerToken(doc.entropy.value.value), BitsPerToken(last.loss), config.param_bits.value_or(0.0)};
  fill_common(doc, config, state);
  add_flags(doc.flags, initial.flags);

  doc.conservation.checked = false;
  doc.conservation.note = "external telemetry has no codec run; conservation not verifiable";

  if (auto eta = state.eta(); eta && config.bit_width)
    doc.quantization = stage("quantization", [&] { return verdicts(*config.bit_width, config.quantization_targets, *eta); });

  doc.series = series_rows(trace, state.entropy.value, state.param_bits);
  return doc;
}

template <class T>
T get_field(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("'") + key + "': " + e.what());
  }
}

}  // namespace

Predictor predictor_from_json(const json& spec, std::uint32_t vocab_size, const Source* source) {
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
    throw ValidationError("predictor spec needs a string 'kind'");
  const std::string kind = spec["kind"];
  auto opt = [&](const char* key, auto fallback) {
    return spec.contains(key) ? get_field<decltype(fallback)>(spec, key) : fallback;
  };
  if (kind == "uniform") return Predictor::uniform(vocab_size);
  if (kind == "ngram")
    return Predictor::ngram(vocab_size, opt("order", 1u), opt("smoothing", 0.5), opt("count_bits", 32u));
  if (kind == "tinylm") {
    TinyLmConfig c;
    c.vocab_size = vocab_size;
    c.context_len = opt("context_len", c.context_len);
    c.hidden_width = opt("hidden_width", c.hidden_width);
    c.bit_width = opt("bit_width", c.bit_width);
    c.learning_rate = opt("learning_rate", c.learning_rate);
    c.seed = opt("seed", c.seed);
    return Predictor::tiny_lm(c);
  }
  if (kind == "oracle") {
    if (!source) throw ValidationError("oracle predictor needs the generating source");
    return Predictor::oracle(*source);
  }
  throw ValidationError("unknown predictor kind '" + kind + "'");
}

std::vector<std::uint64_t> checkpoint_schedule(std::uint64_t length) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t t = 1; t < length; t *= 2) out.push_back(t);
  if (length > 0) out.push_back(length);
  return out;
}

void RunConfig::validate() const {
  if (source.has_value() == log_path.has_value())
    throw ValidationError("run config needs exactly one of 'source' and 'log'");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ValidationError("temperature must be > 0");
  if (initial_loss_window == 0) throw ValidationError("initial_loss_window must be >= 1");
  for (unsigned t : quantization_targets)
    if (t < 1) throw ValidationError("quantization targets must be >= 1");
  if (source) {
    if (length == 0) throw ValidationError("length must be >= 1");
    if (entropy_bits || param_bits || bit_width)
      throw ValidationError("entropy_bits, param_bits and bit_width apply to log runs only");
  } else {
    if (entropy_bits && (!std::isfinite(*entropy_bits) || *entropy_bits < 0.0))
      throw ValidationError("entropy_bits must be finite and >= 0");
    if (param_bits && (!std::isfinite(*param_bits) || *param_bits < 0.0))
      throw ValidationError("param_bits must be finite and >= 0");
    if (bit_width && *bit_width < 1) throw ValidationError("bit_width must be >= 1");
  }
}

json RunConfig::to_json() const {
  json doc;
  if (source) doc["source"] = *source;
  if (log_path) doc["log"] = *log_path;
  doc["predictor"] = predictor;
  doc["mode"] = iclab::to_string(mode);
  doc["length"] = length;
  doc["seed"] = seed;
  doc["pretrain_epochs"] = pretrain_epochs;
  doc["temperature"] = temperature;
  doc["initial_loss_window"] = initial_loss_window;
  if (entropy_bits) doc["entropy_bits"] = *entropy_bits;
  if (param_bits) doc["param_bits"] = *param_bits;
  if (bit_width) doc["bit_width"] = *bit_width;
  doc["quantization_targets"] = quantization_targets;
  json out = json::object();
  if (outputs.json) out["json"] = *outputs.json;
  if (outputs.text) out["text"] = *outputs.text;
  if (outputs.csv) out["csv"] = *outputs.csv;
  doc["outputs"] = out;
  return doc;
}

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("run config must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!kConfigKeys.contains(key)) throw ValidationError("run config: unknown key '" + key + "'");
  RunConfig c;
  if (doc.contains("source")) c.source = doc["source"];
  if (doc.contains("log")) c.log_path = get_field<std::string>(doc, "log");
  if (doc.contains("predictor")) c.predictor = doc["predictor"];
  if (doc.contains("mode")) c.mode = parse_update_mode(get_field<std::string>(doc, "mode"));
  if (doc.contains("length")) c.length = get_field<std::uint64_t>(doc, "length");
  if (doc.contains("seed")) c.seed = get_field<std::uint64_t>(doc, "seed");
  if (doc.contains("pretrain_epochs")) c.pretrain_epochs = get_field<std::size_t>(doc, "pretrain_epochs");
  if (doc.contains("temperature")) c.temperature = get_field<double>(doc, "temperature");
  if (doc.contains("initial_loss_window")) c.initial_loss_window = get_field<std::size_t>(doc, "initial_loss_window");
  if (doc.contains("entropy_bits")) c.entropy_bits = get_field<double>(doc, "entropy_bits");
  if (doc.contains("param_bits")) c.param_bits = get_field<double>(doc, "param_bits");
  if (doc.contains("bit_width")) c.bit_width = get_field<unsigned>(doc, "bit_width");
  if (doc.contains("quantization_targets"))
    c.quantization_targets = get_field<std::vector<unsigned>>(doc, "quantization_targets");
  if (doc.contains("outputs")) {
    const json& o = doc["outputs"];
    if (!o.is_object()) throw ValidationError("'outputs' must be an object");
    if (o.contains("json")) c.outputs.json = get_field<std::string>(o, "json");
    if (o.contains("text")) c.outputs.text = get_field<std::string>(o, "text");
    if (o.contains("csv")) c.outputs.csv = get_field<std::string>(o, "csv");
  }
  c.validate();
  return c;
}

ReportDocument run_experiment(const RunConfig& config) {
  stage("config", [&] { config.validate(); });
  return config.source ? run_internal(config) : run_log(config);
}

}  // namespace iclab::telemetry
