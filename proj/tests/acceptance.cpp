// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "iclab/codec.hpp"
#include "iclab/ic_laws.hpp"
#include "iclab/quantlab.hpp"
#include "iclab/rng.hpp"
#include "iclab/scaling.hpp"
#include "iclab/telemetry.hpp"

using namespace iclab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double binary_entropy(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

// 1 ---------------------------------------------------------------------------
Outcome conservation() {
  const Source src = Source::binary_sticky(0.9);
  const std::size_t d = 100000;
  const TokenStream s = sample_stream(src, d, 1);
  const double h = exact_entropy_rate(src).value;
  if (std::abs(h - binary_entropy(0.1)) > 1e-12) return {false, "exact entropy disagrees with h(0.1)"};

  const Predictor init = Predictor::ngram(2, 1, 0.5);
  Predictor coder = init;
  const CodeReport code = ideal_codelength(s, coder, UpdateMode::Online, true);
  const double l_preq = average_cross_entropy(init, s, UpdateMode::Online);
  const double lhs = static_cast<double>(d) * h - code.ideal_bits;
  const double rhs = static_cast<double>(d) * (h - l_preq);
  const double gap = std::abs(lhs - rhs);

  telemetry::RunConfig cfg;
  cfg.source = source_to_json(src);
  cfg.predictor = json{{"kind", "ngram"}, {"order", 1}, {"smoothing", 0.5}};
  cfg.length = d;
  cfg.seed = 1;
  const telemetry::ReportDocument doc = telemetry::run_experiment(cfg);
  const double n = static_cast<double>(init.param_bits());

  double worst = 0.0;
  double prefix = 0.0;
  std::size_t t = 0;
  for (const auto& row : doc.series) {
    for (; t < row.tokens; ++t) prefix += (*code.per_token_bits)[t];
    const double eta_codec = (static_cast<double>(row.tokens) * h - prefix) / n;
    if (!row.eta) return {false, "trajectory row without eta"};
    worst = std::max(worst, std::abs(*row.eta - eta_codec));
  }
  const bool ok = gap <= 1e-6 && worst <= 1e-9 && doc.conservation.holds.value_or(false);
  return {ok, fmt("|DH-ideal - D(H-L)| = %.3g bits; max trajectory eta deviation %.3g over ", gap, worst) +
                  std::to_string(doc.series.size()) + " checkpoints"};
}

// 2 ---------------------------------------------------------------------------
Outcome codec_soundness() {
  std::vector<Source> sources{
      Source::binary_sticky(0.9),
      Source::iid({0.7, 0.2, 0.05, 0.05}),
      Source::uniform(16),
      Source::deterministic(5, {0, 3, 1, 4, 2}),
      Source::markov(3, 2, [] {
        TransitionMap t;
        for (Token a = 0; a < 3; ++a)
          for (Token b = 0; b < 3; ++b) {
            std::vector<double> p{0.1, 0.1, 0.1};
            p[(a + b) % 3] = 0.8;
            t[{a, b}] = p;
          }
        return t;
      }()),
      Source::uniform(256),
  };
  std::size_t combos = 0, failures = 0;
  double worst_slack = INFINITY;
  for (const Source& src : sources) {
    const std::uint32_t v = src.vocab_size();
    std::vector<Predictor> preds{Predictor::uniform(v), Predictor::ngram(v, 0, 0.5), Predictor::ngram(v, 1, 0.5),
                                 Predictor::tiny_lm({v, 2, 8, 32, 0.05, 3}), Predictor::oracle(src)};
    if (v <= 16) preds.push_back(Predictor::ngram(v, 2, 0.1));
    for (const Predictor& p : preds)
      for (UpdateMode mode : {UpdateMode::Frozen, UpdateMode::Online})
        for (std::uint64_t seed : {1u, 2u, 3u}) {
          const TokenStream s = sample_stream(src, 1000, seed * 7919 + v);
          Predictor enc = p, dec = p;
          const Encoded e = encode(s, enc, mode);
          const bool roundtrip = decode(e.bits, dec, mode, s.size()) == s;
          const double slack =
              overhead_bound(e.report.ideal_bits) - (static_cast<double>(e.report.total_bits) - e.report.ideal_bits);
          worst_slack = std::min(worst_slack, slack);
          ++combos;
          if (!roundtrip || slack < 0) ++failures;
        }
  }
  return {combos >= 200 && failures == 0,
          std::to_string(combos) + " combinations, " + std::to_string(failures) + " failures" +
              fmt(", min slack to overhead bound %.2f bits", worst_slack)};
}

// 3 ---------------------------------------------------------------------------
Outcome eq4_equivalence() {
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const std::uint32_t v = 2 + static_cast<std::uint32_t>(rng.next_u64() % 7);
    std::vector<double> probs(v);
    double z = 0.0;
    for (double& p : probs) z += (p = 0.05 + rng.uniform());
    for (double& p : probs) p /= z;
    const Source src = Source::iid(probs);
    const std::size_t len = 200 + rng.next_u64() % 800;
    const TokenStream s = sample_stream(src, len, rng.next_u64());
    Predictor p = [&] {
      switch (i % 4) {
        case 0: return Predictor::ngram(v, 1 + rng.next_u64() % 2, rng.uniform(0.05, 1.0));
        case 1: return Predictor::tiny_lm({v, 2, 6, 32, 0.1, rng.next_u64()});
        case 2: return Predictor::oracle(src);
        default: return Predictor::uniform(v);
      }
    }();
    const UpdateMode mode = i % 2 ? UpdateMode::Online : UpdateMode::Frozen;
    const double avg = average_cross_entropy(p, s, mode);
    Predictor q = p;
    const double ideal = ideal_codelength(s, q, mode).ideal_bits / static_cast<double>(len);
    worst = std::max(worst, std::abs(avg - ideal));
  }
  return {worst <= 1e-9, fmt("max |ideal/D - cross-entropy| = %.3g bits/token over 20 fixtures", worst)};
}

// 4 ---------------------------------------------------------------------------
Outcome token_ratio() {
  const auto r = scaling::derive_token_ratio();
  const bool k_ok = std::abs(r.ratio_k - 26.07) <= 0.01;
  const bool lo_ok = std::abs(r.eta_low - 0.115) <= 0.001;
  const bool hi_ok = std::abs(r.eta_high - 0.268) <= 0.001;
  const bool data = scaling::eval_power_law(scaling::kDataLaw, 5.4e13) == 1.0;
  const bool model = scaling::eval_power_law(scaling::kModelBitsLaw, 16 * 8.8e13) == 1.0;
  return {k_ok && lo_ok && hi_ok && data && model,
          fmt("k = %.4f, eta in [%.4f, %.4f]", r.ratio_k, r.eta_low, r.eta_high) +
              (data && model ? ", both laws give L = 1 at their scale" : ", law anchor mismatch")};
}

// 5 ---------------------------------------------------------------------------
Outcome gap() {
  const double g0 = scaling::gap_function(1.0), g12 = scaling::gap_function(1e12);
  double mx = 0.0;
  for (double x : scaling::log_grid(1.0, 1e12, 1000))
    if (x > 1.0) mx = std::max(mx, scaling::gap_function(x));
  return {g0 == 0.0 && std::abs(g12 - 5.64) <= 0.01 && mx < 10.0,
          fmt("f(1) = %g, f(1e12) = %.4f, max on grid = %.4f", g0, g12, mx)};
}

// 6 ---------------------------------------------------------------------------
Outcome landauer() {
  const double e1 = landauer_bound(1.0, {.temperature = 300.0});
  Rng rng(6);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double bits = rng.uniform(0, 1e15), t = rng.uniform(0.01, 5000);
    const double direct = bits * 1.380649e-23 * t * std::log(2.0);
    worst = std::max(worst, std::abs(landauer_bound(bits, {.temperature = t}) - direct) / direct);
  }
  return {std::abs(e1 - 2.871e-21) <= 1e-24 && worst <= 1e-12,
          fmt("E0(1 bit, 300 K) = %.6g J; max relative deviation from direct product %.2g", e1, worst)};
}

// 7 ---------------------------------------------------------------------------
Outcome corollary() {
  std::vector<double> probs(256);
  Rng rng(7);
  double z = 0.0;
  for (double& p : probs) z += (p = 1.0 + 0.05 * (rng.uniform() - 0.5));
  for (double& p : probs) p /= z;
  telemetry::RunConfig a;
  a.source = source_to_json(Source::iid(probs));
  a.length = 20000;
  const auto da = telemetry::run_experiment(a);
  double est = NAN;
  for (const auto& e : da.entropy_estimates)
    if (e.method == "initial_loss") est = e.value.value;

  telemetry::RunConfig b;
  b.source = json{{"kind", "binary_sticky"}, {"stay", 0.9}};
  b.length = 20000;
  const auto db = telemetry::run_experiment(b);
  double est_b = NAN;
  for (const auto& e : db.entropy_estimates)
    if (e.method == "initial_loss") est_b = e.value.value;
  const bool flagged = std::find(db.flags.begin(), db.flags.end(), "corollary-bias") != db.flags.end();
  return {std::abs(est - 8.0) <= 0.2 && flagged && std::abs(est_b - 1.0) < 0.05,
          fmt("near-uniform |V|=256: %.4f bits; binary Markov: %.4f vs H = %.4f", est, est_b,
              db.entropy.value.value) +
              (flagged ? ", bias flag present" : ", bias flag missing")};
}

// 8 ---------------------------------------------------------------------------
Outcome quantization() {
  const auto cells = quantlab::run_standard_matrix();
  std::size_t undegraded = 0, contradictions = 0, violating_degraded = 0;
  for (const auto& c : cells) {
    if (!c.result.degraded) {
      ++undegraded;
      if (c.result.eta_times_b > c.result.target_bit_width) ++contradictions;
    } else if (c.result.eta_times_b > c.result.target_bit_width) {
      ++violating_degraded;
    }
  }
  std::string ratios;
  for (auto [e, r] : quantlab::max_undegraded_ratio(cells)) ratios += " " + std::to_string(e) + ":" + fmt("%g", r);
  return {cells.size() == 12 && contradictions == 0 && violating_degraded >= 1,
          std::to_string(cells.size()) + " cells, " + std::to_string(undegraded) + " undegraded (" +
              std::to_string(contradictions) + " with eta*b > b'), " + std::to_string(violating_degraded) +
              " degraded cells with eta*b > b'; max undegraded b/b' by epochs:" + ratios};
}

// 9 ---------------------------------------------------------------------------
Outcome memorization() {
  telemetry::RunConfig c;
  c.source = json{{"kind", "uniform"}, {"vocab_size", 4}};
  c.length = 1000;
  c.seed = 9;
  c.predictor = json{{"kind", "ngram"}, {"order", 8}, {"smoothing", 0.001}};
  c.mode = UpdateMode::Frozen;
  c.pretrain_epochs = 1;
  const auto d = telemetry::run_experiment(c);
  const double dh = 1000 * 2.0;
  const double info = d.terminal.effective_info.value;
  const double eta = d.terminal.eta ? d.terminal.eta->value : NAN;
  return {info >= 0.95 * dh && eta <= 1.0,
          fmt("I = %.1f of D*H = %.0f bits (%.2f%%), ", info, dh, 100 * info / dh) + fmt("eta = %.3g", eta)};
}

// 10 --------------------------------------------------------------------------
Outcome fitter() {
  std::vector<std::pair<double, double>> pts;
  for (double x : scaling::log_grid(1e9, 1e16, 50)) pts.emplace_back(x, scaling::eval_power_law(scaling::kDataLaw, x));
  const auto f = scaling::fit_power_law(pts);
  return {std::abs(f.exponent + 0.095) <= 1e-6, fmt("exponent %.12f from 50 points", f.exponent)};
}

// 11 --------------------------------------------------------------------------
Outcome determinism() {
  std::vector<telemetry::RunConfig> configs(4);
  configs[0].source = json{{"kind", "binary_sticky"}, {"stay", 0.9}};
  configs[1].source = json{{"kind", "uniform"}, {"vocab_size", 8}};
  configs[1].predictor = json{{"kind", "tinylm"}, {"context_len", 3}, {"hidden_width", 8}, {"seed", 5}};
  configs[1].length = 5000;
  configs[2].source = json{{"kind", "iid"}, {"probabilities", {0.5, 0.3, 0.2}}};
  configs[2].predictor = json{{"kind", "uniform"}};
  const auto log = std::filesystem::temp_directory_path() / "iclab_acceptance_log.jsonl";
  std::ofstream(log) << "{\"tokens_seen\":10,\"loss\":2.0}\n{\"tokens_seen\":20,\"loss\":1.5}\n";
  configs[3].log_path = log.string();
  configs[3].entropy_bits = 3.0;
  configs[3].param_bits = 64;
  std::size_t identical = 0;
  for (const auto& c : configs)
    identical += telemetry::render_json(telemetry::run_experiment(c)) ==
                 telemetry::render_json(telemetry::run_experiment(c));
  std::filesystem::remove(log);
  return {identical == configs.size(),
          std::to_string(identical) + "/" + std::to_string(configs.size()) + " configs byte-identical"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "conservation", 10, conservation},
      {2, "codec soundness", 60, codec_soundness},
      {3, "ideal codelength equals cross-entropy", 0, eq4_equivalence},
      {4, "token ratio and law anchors", 0, token_ratio},
      {5, "gap function", 0, gap},
      {6, "Landauer bound", 0, landauer},
      {7, "initial-loss entropy estimate", 0, corollary},
      {8, "quantization conditions", 120, quantization},
      {9, "memorization ceiling", 0, memorization},
      {10, "power-law fitter", 0, fitter},
      {11, "report determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s budget]", c.budget_s);
    }
    failed += !o.pass;
    std::printf("%s %2d %-38s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
