// SPDX-License-Identifier: Apache-2.0

#include "iclab/ic_laws.hpp"

#include <algorithm>
#include <cmath>

#include "iclab/error.hpp"

namespace iclab {

std::string to_string(Flag f) {
  switch (f) {
    case Flag::NegativeInformation:
      return "negative-information";
    case Flag::EtaAboveOne:
      return "eta-above-one";
    case Flag::NoCapacity:
      return "no-capacity-baseline";
    case Flag::CorollaryCaveat:
      return "corollary-caveat";
    case Flag::CorollaryBias:
      return "corollary-bias";
  }
  return "unknown";
}

void FlagSet::add(Flag f) {
  if (!has(f)) flags.push_back(f);
}

bool FlagSet::has(Flag f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }

double effective_information(double tokens, BitsPerToken entropy, BitsPerToken loss) {
  if (!(tokens >= 0.0)) throw ValidationError("effective_information: D must be >= 0");
  return tokens * (entropy.value - loss.value);
}

double information_capacity(double tokens, BitsPerToken entropy, BitsPerToken loss, double param_bits) {
  if (!(param_bits > 0.0)) throw ValidationError("information_capacity: N must be > 0 (no-capacity baseline)");
  return effective_information(tokens, entropy, loss) / param_bits;
}

double ICState::effective_info() const { return effective_information(tokens, entropy, loss); }

std::optional<double> ICState::eta() const {
  if (!(param_bits > 0.0)) return std::nullopt;
  return information_capacity(tokens, entropy, loss, param_bits);
}

FlagSet ICState::flags() const {
  FlagSet f;
  if (effective_info() < 0.0) f.add(Flag::NegativeInformation);
  const auto e = eta();
  if (!e) f.add(Flag::NoCapacity);
  else if (*e > 1.0) f.add(Flag::EtaAboveOne);
  return f;
}

void TrainingTrace::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && records[i].tokens_seen <= records[i - 1].tokens_seen)
      throw ValidationError("training trace: tokens_seen not strictly increasing at record " + std::to_string(i + 1));
    if (!(records[i].loss >= 0.0) || !std::isfinite(records[i].loss))
      throw ValidationError("training trace: loss must be finite and >= 0 at record " + std::to_string(i + 1));
  }
}

TrainingTrace TrainingTrace::to_bits() const {
  TrainingTrace out{LossUnit::Bits, records};
  if (unit == LossUnit::Nats)
    for (auto& r : out.records) r.loss = nats_to_bits(r.loss);
  return out;
}

std::vector<CapacityPoint> capacity_trajectory(const TrainingTrace& trace, BitsPerToken entropy, double param_bits) {
  if (trace.unit != LossUnit::Bits)
    throw ValidationError("capacity_trajectory: trace losses are in nats; convert to bits first");
  if (trace.records.empty()) throw ValidationError("capacity_trajectory: trace is empty");
  trace.validate();
  std::vector<CapacityPoint> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    CapacityPoint p;
    p.tokens = r.tokens_seen;
    p.loss_bits = r.loss;
    p.effective_info = effective_information(static_cast<double>(r.tokens_seen), entropy, BitsPerToken(r.loss));
    p.eta = information_capacity(static_cast<double>(r.tokens_seen), entropy, BitsPerToken(r.loss), param_bits);
    out.push_back(p);
  }
  return out;
}

double landauer_bound(double effective_info_bits, const LandauerParams& params) {
  if (!(params.temperature > 0.0)) throw ValidationError("landauer_bound: temperature must be > 0 K");
  if (!(params.boltzmann > 0.0)) throw ValidationError("landauer_bound: Boltzmann constant must be > 0");
  if (effective_info_bits < 0.0)
    throw ValidationError("landauer_bound: effective information is negative; resolve the conservation flag first");
  return effective_info_bits * params.boltzmann * params.temperature * kLn2;
}

InitialLossEstimate entropy_from_initial_loss(const TrainingTrace& trace, std::size_t window,
                                              std::optional<BitsPerToken> known_entropy) {
  if (window == 0) throw ValidationError("entropy_from_initial_loss: window is empty");
  if (trace.records.size() < window)
    throw ValidationError("entropy_from_initial_loss: trace has " + std::to_string(trace.records.size()) +
                          " records, window needs " + std::to_string(window));
  const TrainingTrace bits = trace.to_bits();
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    sum += bits.records[i].loss;
    sq += bits.records[i].loss * bits.records[i].loss;
  }
  const double n = static_cast<double>(window);
  InitialLossEstimate out;
  out.estimate.method = EntropyEstimate::Method::InitialLoss;
  out.estimate.parameter = window;
  out.estimate.value = sum / n;
  if (window > 1) {
    const double var = std::max(0.0, (sq - sum * sum / n) / (n - 1));
    out.estimate.standard_error = std::sqrt(var / n);
  }
  out.flags.add(Flag::CorollaryCaveat);
  if (known_entropy && std::abs(out.estimate.value - known_entropy->value) > kCorollaryBiasTolerance)
    out.flags.add(Flag::CorollaryBias);
  return out;
}

QuantizationVerdict quantization_condition(const QuantizationSpec& spec) {
  if (spec.bit_width < 1 || spec.target_bit_width < 1)
    throw ValidationError("quantization_condition: bit widths must be >= 1");
  if (spec.eta_after && !(*spec.eta_after >= 0.0 && *spec.eta_after <= 1.0))
    throw ValidationError("quantization_condition: eta' must lie in [0, 1]");
  const double eta_b = spec.eta * spec.bit_width;
  QuantizationVerdict v;
  v.necessary_margin = static_cast<double>(spec.target_bit_width) - eta_b;
  v.necessary_holds = v.necessary_margin >= 0.0;
  if (spec.eta_after) {
    v.full_margin = *spec.eta_after * spec.target_bit_width - eta_b;
    v.full_holds = *v.full_margin >= 0.0;
  }
  return v;
}

}  // namespace iclab
