#pragma once

// SPDX-License-Identifier: Apache-2.0

// Training-log ingestion, experiment orchestration and IC reports.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iclab/ic_laws.hpp"
#include "iclab/json_io.hpp"
#include "iclab/predictors.hpp"

namespace iclab::telemetry {

/// JSONL, one record per line:
///   {"tokens_seen": 100, "loss": 6.931, "loss_unit": "nats"}
/// loss_unit defaults to nats. Blank lines are skipped. Returns the trace in bits.
TrainingTrace parse_training_log(std::string_view text);
TrainingTrace read_training_log(const std::filesystem::path& path);

/// Predictor from a JSON spec:
///   {"kind": "uniform"}
///   {"kind": "ngram", "order": 1, "smoothing": 0.5, "count_bits": 32}
///   {"kind": "tinylm", "context_len": 4, "hidden_width": 16, "bit_width": 32,
///    "learning_rate": 0.05, "seed": 0}
///   {"kind": "oracle"}            (needs the generating source)
Predictor predictor_from_json(const json& spec, std::uint32_t vocab_size, const Source* source = nullptr);

struct OutputPaths {
  std::optional<std::string> json;
  std::optional<std::string> text;
  std::optional<std::string> csv;
  friend bool operator==(const OutputPaths&, const OutputPaths&) = default;
};

struct RunConfig {
  std::optional<json> source;          ///< source spec (internal run)
  std::optional<std::string> log_path; ///< training log (external telemetry)
  json predictor = json{{"kind", "ngram"}, {"order", 1}, {"smoothing", 0.5}};
  UpdateMode mode = UpdateMode::Online;
  std::uint64_t length = 100000;
  std::uint64_t seed = 0;
  /// Epochs of training on the sampled stream before it is coded.
  std::size_t pretrain_epochs = 0;
  double temperature = 300.0;
  std::size_t initial_loss_window = 1;
  std::optional<double> entropy_bits;  ///< user-supplied H (logs)
  std::optional<double> param_bits;    ///< user-supplied N (logs)
  std::optional<unsigned> bit_width;   ///< parameter width b (logs)
  std::vector<unsigned> quantization_targets{16, 8, 4, 2, 1};
  OutputPaths outputs;

  /// Exactly one of source / log_path; positive length and temperature.
  void validate() const;
  json to_json() const;
  static RunConfig from_json(const json& doc);
};

struct Quantity {
  double value = 0.0;
  std::string unit;
  friend bool operator==(const Quantity&, const Quantity&) = default;
};

struct EntropyEntry {
  std::string method;  ///< exact | plugin | initial_loss | user
  Quantity value;
  std::optional<Quantity> parameter;  ///< plug-in order or initial-loss window
  std::optional<Quantity> standard_error;
  friend bool operator==(const EntropyEntry&, const EntropyEntry&) = default;
};

struct SeriesRow {
  std::uint64_t tokens = 0;
  double loss = 0.0;  ///< bits/token
  double effective_info = 0.0;
  std::optional<double> eta;
  friend bool operator==(const SeriesRow&, const SeriesRow&) = default;
};

struct CapacityBlock {
  std::string baseline;  ///< which H the block is computed against
  Quantity entropy;
  Quantity effective_info;
  std::optional<Quantity> eta;  ///< absent for a no-capacity baseline
  bool no_capacity = false;
  std::optional<Quantity> energy;  ///< absent when effective information is negative
  friend bool operator==(const CapacityBlock&, const CapacityBlock&) = default;
};

struct ConservationBlock {
  bool checked = false;
  std::string note;
  std::optional<Quantity> ideal_bits;
  std::optional<Quantity> prequential_bits;
  std::optional<Quantity> difference;
  std::optional<bool> holds;
  friend bool operator==(const ConservationBlock&, const ConservationBlock&) = default;
};

struct VerdictRow {
  unsigned bit_width = 0;
  unsigned target_bit_width = 0;
  bool necessary_holds = false;
  double margin = 0.0;
  friend bool operator==(const VerdictRow&, const VerdictRow&) = default;
};

struct ReportDocument {
  std::string provenance;  ///< internal-run | external-telemetry
  json inputs;
  EntropyEntry entropy;
  std::vector<EntropyEntry> entropy_estimates;
  Quantity dataset_quality;
  Quantity tokens;
  Quantity loss;
  Quantity param_bits;
  Quantity temperature;
  Quantity energy_per_bit;
  CapacityBlock terminal;
  std::optional<CapacityBlock> uniform_baseline;
  ConservationBlock conservation;
  std::vector<VerdictRow> quantization;
  std::vector<std::string> flags;
  std::vector<SeriesRow> series;

  json to_json() const;
  static ReportDocument from_json(const json& doc);
  friend bool operator==(const ReportDocument&, const ReportDocument&) = default;
};

/// Tolerance on |L_trace - ideal_bits / D| for the conservation check.
inline constexpr double kConservationTolerance = 1e-9;

/// Token counts at which the trajectory is recorded: 1, 2, 4, ... and D.
std::vector<std::uint64_t> checkpoint_schedule(std::uint64_t length);

/// Runs one experiment. Errors from a pipeline stage come back as StageError.
ReportDocument run_experiment(const RunConfig& config);

enum class ReportFormat { Json, Text, CsvSeries };
ReportFormat parse_report_format(std::string_view s);

std::string render_json(const ReportDocument& doc);
std::string render_text(const ReportDocument& doc);
std::string render_csv_series(const ReportDocument& doc);
std::string render(const ReportDocument& doc, ReportFormat format);

/// Writes the rendered report; IoError if the path is not writable.
void emit_report(const ReportDocument& doc, ReportFormat format, const std::filesystem::path& path);

}  // namespace iclab::telemetry
