#pragma once

// SPDX-License-Identifier: Apache-2.0

// Post-training quantization bench: quantize predictors to b' bits, measure
// loss degradation on an evaluation stream and set the measurements against
// the capacity conditions eta b <= b' and eta b <= eta' b'.

#include <optional>
#include <string>
#include <vector>

#include "iclab/ic_laws.hpp"
#include "iclab/json_io.hpp"
#include "iclab/predictors.hpp"

namespace iclab::quantlab {

/// Degradation tolerance in bits/token.
inline constexpr double kDefaultTolerance = 0.05;

/// Parameter width b of a quantizable predictor (count width or numeric
/// format width). Throws ValidationError for uniform and oracle predictors.
unsigned source_bit_width(const Predictor& predictor);

/// Every stored parameter made representable in `target_bits` bits.
///   TinyLM: per-tensor symmetric uniform quantizer over [-max|w|, max|w|]
///           with 2^b' cells reconstructed at cell midpoints; identity when
///           b' >= b.
///   NGram:  counts rescaled to fit b'-bit cells, probabilities renormalized
///           by the smoothing formula.
Predictor quantize_predictor(const Predictor& predictor, unsigned target_bits);

struct QuantizationResult {
  std::string checkpoint;
  unsigned bit_width = 0;         ///< b
  unsigned target_bit_width = 0;  ///< b'
  double loss_before = 0.0;       ///< bits/token, frozen, on the evaluation stream
  double loss_after = 0.0;
  double eta_before = 0.0;
  double eta_times_b = 0.0;
  double eta_after = 0.0;  ///< measured with the quantized model and N' = params * b'
  bool condition_pass = false;  ///< eta b <= b'
  std::optional<bool> full_condition_pass;  ///< eta b <= eta' b' when 0 <= eta' <= 1
  bool degraded = false;  ///< loss_after - loss_before > tolerance
  std::uint64_t param_bits_before = 0;
  std::uint64_t param_bits_after = 0;
};

struct QuantizationExperiment {
  std::string checkpoint_id = "checkpoint";
  std::optional<Predictor> checkpoint;
  std::vector<unsigned> target_widths;
  TokenStream eval_stream;
  /// H for the capacity state; D defaults to the evaluation stream length.
  BitsPerToken entropy;
  std::optional<double> tokens;
  double tolerance = kDefaultTolerance;
};

/// The capacity state (D, H, L_before, N) used for eta_before.
ICState experiment_state(const QuantizationExperiment& experiment);

/// One result per requested target width, in order.
std::vector<QuantizationResult> degradation_experiment(const QuantizationExperiment& experiment);

/// Configuration of the standard matrix: a TinyLM memorizing a random IID
/// stream, checkpointed after several training lengths, each quantized to
/// several widths.
struct StandardMatrixConfig {
  std::uint32_t vocab_size = 16;
  std::size_t stream_length = 1000;
  std::uint64_t stream_seed = 2024;
  TinyLmConfig model{16, 4, 16, 32, 0.05, 7};
  std::vector<std::size_t> epochs{1, 20, 200};
  std::vector<unsigned> target_widths{1, 2, 4, 8};
  double tolerance = kDefaultTolerance;
};

struct MatrixCell {
  std::size_t epochs = 0;
  QuantizationResult result;
};

std::vector<MatrixCell> run_standard_matrix(const StandardMatrixConfig& config = {});

/// b / (smallest undegraded b') for each training length; 0 when every width degrades.
std::vector<std::pair<std::size_t, double>> max_undegraded_ratio(const std::vector<MatrixCell>& cells);

// Standard matrix config, every key optional:
//   {"vocab_size": 16, "stream_length": 1000, "stream_seed": 2024,
//    "context_len": 4, "hidden_width": 16, "bit_width": 32, "learning_rate": 0.05,
//    "model_seed": 7, "epochs": [1, 20, 200], "target_widths": [1, 2, 4, 8],
//    "tolerance": 0.05}
StandardMatrixConfig standard_matrix_from_json(const json& doc);

json to_json(const QuantizationResult& r);
/// One JSON object per line, appended.
void append_results_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

}  // namespace iclab::quantlab
