// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "iclab/codec.hpp"
#include "iclab/error.hpp"
#include "iclab/ic_laws.hpp"
#include "iclab/json_io.hpp"
#include "iclab/kernels.hpp"
#include "iclab/quantlab.hpp"
#include "iclab/scaling.hpp"
#include "iclab/stream_io.hpp"
#include "iclab/telemetry.hpp"

namespace fs = std::filesystem;
using namespace iclab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

fs::path output_dir() {
  const char* env = std::getenv("ICLAB_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

fs::path resolve_output(const std::string& given, const char* default_name) {
  if (!given.empty()) return given;
  const fs::path dir = output_dir();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir / default_name;
}

// Inline JSON if it looks like an object, otherwise a file path.
json json_arg(const std::string& arg, const char* what) {
  if (!arg.empty() && arg.front() == '{') {
    try {
      return json::parse(arg);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string(what) + ": " + e.what());
    }
  }
  return read_json_file(arg);
}

json q(double v, const char* unit) { return json{{"value", v}, {"unit", unit}}; }

json code_report_json(const CodeReport& r) {
  return json{{"mode", to_string(r.mode)},
              {"tokens", q(static_cast<double>(r.token_count), "tokens")},
              {"total_bits", q(static_cast<double>(r.total_bits), "bits")},
              {"ideal_bits", q(r.ideal_bits, "bits")},
              {"quantized_ideal_bits", q(r.quantized_ideal_bits, "bits")},
              {"average_bits", q(r.average_bits(), "bits/token")},
              {"overhead_bits", q(static_cast<double>(r.total_bits) - r.ideal_bits, "bits")},
              {"clamped_probabilities", q(static_cast<double>(r.clamped_probabilities), "count")}};
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

// gen ------------------------------------------------------------------------

struct GenOpts {
  std::string source, out;
  std::uint64_t length = 10000, seed = 0;
};

void cmd_gen(const GenOpts& o) {
  const Source src = source_from_json(json_arg(o.source, "source"));
  const TokenStream stream = sample_stream(src, o.length, o.seed);
  const fs::path out = resolve_output(o.out, "stream.iclt");
  write_stream(out, stream);
  std::cout << "wrote " << stream.size() << " tokens (|V| = " << stream.vocab_size << ") to " << out.string() << "\n";
}

// compress -------------------------------------------------------------------

struct CompressOpts {
  std::string input, out, predictor = R"({"kind":"ngram","order":1,"smoothing":0.5})", source, mode = "online",
                                checkpoint_out;
  std::uint32_t vocab_size = 0;
  bool decompress = false;
};

void cmd_compress(const CompressOpts& o) {
  std::optional<Source> src;
  if (!o.source.empty()) src = source_from_json(json_arg(o.source, "source"));
  const json spec = json_arg(o.predictor, "predictor");
  const UpdateMode mode = parse_update_mode(o.mode);

  if (o.decompress) {
    const CompressedFile file = deserialize_container(read_file_bytes(o.input));
    const std::uint32_t v = o.vocab_size ? o.vocab_size : src ? src->vocab_size() : 0;
    if (v == 0) throw ValidationError("decompress needs --vocab-size or --source");
    const TokenStream stream = decompress(file, telemetry::predictor_from_json(spec, v, src ? &*src : nullptr));
    const fs::path out = resolve_output(o.out, "decompressed.iclt");
    write_stream(out, stream);
    std::cout << "decoded " << stream.size() << " tokens to " << out.string() << "\n";
    return;
  }

  const TokenStream stream = read_stream(o.input);
  const Predictor initial = telemetry::predictor_from_json(spec, stream.vocab_size, src ? &*src : nullptr);
  Predictor enc = initial;
  const Encoded encoded = encode(stream, enc, mode);
  Predictor dec = initial;
  const bool roundtrip = decode(encoded.bits, dec, mode, stream.size()) == stream;

  CompressedFile file{mode, initial.checkpoint_hash(), stream.size(), encoded.bits};
  const fs::path out = resolve_output(o.out, "compressed.iclc");
  write_file_bytes(out, serialize_container(file));
  if (!o.checkpoint_out.empty()) write_file_bytes(o.checkpoint_out, enc.checkpoint());

  json j = code_report_json(encoded.report);
  j["roundtrip"] = roundtrip;
  j["output"] = out.string();
  print_json(j);
  if (!roundtrip) throw ValidationError("roundtrip mismatch");
}

// run / analyze-log ----------------------------------------------------------

struct ReportOpts {
  std::string json_out, text_out, csv_out, format = "text";
};

void write_reports(const telemetry::ReportDocument& doc, const telemetry::OutputPaths& paths, const ReportOpts& o) {
  telemetry::OutputPaths p = paths;
  if (!o.json_out.empty()) p.json = o.json_out;
  if (!o.text_out.empty()) p.text = o.text_out;
  if (!o.csv_out.empty()) p.csv = o.csv_out;
  if (!p.json && !p.text && !p.csv) p.json = resolve_output("", "report.json").string();
  if (p.json) telemetry::emit_report(doc, telemetry::ReportFormat::Json, *p.json);
  if (p.text) telemetry::emit_report(doc, telemetry::ReportFormat::Text, *p.text);
  if (p.csv) telemetry::emit_report(doc, telemetry::ReportFormat::CsvSeries, *p.csv);
  std::cout << telemetry::render(doc, telemetry::parse_report_format(o.format));
}

struct RunOpts {
  std::string config;
  std::optional<std::uint64_t> seed, length;
  ReportOpts report;
};

void cmd_run(const RunOpts& o) {
  json doc = read_json_file(o.config);
  if (o.seed && doc.is_object()) doc["seed"] = *o.seed;
  if (o.length && doc.is_object()) doc["length"] = *o.length;
  const telemetry::RunConfig config = telemetry::RunConfig::from_json(doc);
  write_reports(telemetry::run_experiment(config), config.outputs, o.report);
}

struct LogOpts {
  std::string log;
  std::optional<double> entropy_bits, param_bits;
  std::optional<unsigned> bit_width;
  std::size_t window = 1;
  double temperature = 300.0;
  ReportOpts report;
};

void cmd_analyze_log(const LogOpts& o) {
  telemetry::RunConfig config;
  config.log_path = o.log;
  config.entropy_bits = o.entropy_bits;
  config.param_bits = o.param_bits;
  config.bit_width = o.bit_width;
  config.initial_loss_window = o.window;
  config.temperature = o.temperature;
  write_reports(telemetry::run_experiment(config), {}, o.report);
}

// landauer / quantcheck ------------------------------------------------------

void cmd_landauer(double bits, double temperature) {
  const double e = landauer_bound(bits, {.temperature = temperature});
  print_json({{"bits", q(bits, "bits")}, {"temperature", q(temperature, "K")}, {"energy", q(e, "J")}});
}

struct QuantcheckOpts {
  double eta = 0.0;
  unsigned bit_width = 16, target = 8;
  std::optional<double> eta_after;
};

void cmd_quantcheck(const QuantcheckOpts& o) {
  const QuantizationVerdict v = quantization_condition({o.bit_width, o.target, o.eta, o.eta_after});
  json j{{"eta", q(o.eta, "bits/bit")},
         {"bit_width", q(o.bit_width, "bits")},
         {"target_bit_width", q(o.target, "bits")},
         {"necessary_holds", v.necessary_holds},
         {"necessary_margin", q(v.necessary_margin, "bits")},
         {"lossless_possible", v.lossless_possible()}};
  if (v.full_holds) {
    j["full_holds"] = *v.full_holds;
    j["full_margin"] = q(*v.full_margin, "bits");
  }
  print_json(j);
}

// quantlab -------------------------------------------------------------------

struct QuantlabOpts {
  std::string config, checkpoint, stream, results;
  std::optional<double> entropy_bits;
  std::vector<unsigned> targets{8, 4, 2, 1};
  double tolerance = quantlab::kDefaultTolerance;
};

void print_result_row(std::size_t epochs, const quantlab::QuantizationResult& r) {
  std::printf("%-24s %6zu %3u -> %2u  L %.4f -> %.4f  eta*b %8.4f  %-4s %s\n", r.checkpoint.c_str(), epochs,
              r.bit_width, r.target_bit_width, r.loss_before, r.loss_after, r.eta_times_b,
              r.condition_pass ? "pass" : "fail", r.degraded ? "degraded" : "ok");
}

void cmd_quantlab(const QuantlabOpts& o) {
  std::vector<json> records;
  if (!o.checkpoint.empty()) {
    if (o.stream.empty()) throw ValidationError("--checkpoint needs --stream");
    quantlab::QuantizationExperiment exp;
    exp.checkpoint_id = fs::path(o.checkpoint).filename().string();
    exp.checkpoint = Predictor::from_checkpoint(read_file_bytes(o.checkpoint));
    exp.eval_stream = read_stream(o.stream);
    exp.entropy = BitsPerToken(o.entropy_bits.value_or(std::log2(static_cast<double>(exp.eval_stream.vocab_size))));
    exp.target_widths = o.targets;
    exp.tolerance = o.tolerance;
    for (const auto& r : quantlab::degradation_experiment(exp)) {
      print_result_row(0, r);
      records.push_back(quantlab::to_json(r));
    }
  } else {
    const quantlab::StandardMatrixConfig config =
        o.config.empty() ? quantlab::StandardMatrixConfig{} : quantlab::standard_matrix_from_json(read_json_file(o.config));
    const auto cells = quantlab::run_standard_matrix(config);
    for (const auto& c : cells) {
      print_result_row(c.epochs, c.result);
      json j = quantlab::to_json(c.result);
      j["epochs"] = c.epochs;
      records.push_back(j);
    }
    for (auto [epochs, ratio] : quantlab::max_undegraded_ratio(cells))
      std::printf("epochs %zu: max undegraded b/b' = %g\n", epochs, ratio);
  }
  const fs::path out = resolve_output(o.results, "quantlab.jsonl");
  quantlab::append_results_jsonl(out, records);
  std::cout << "appended " << records.size() << " records to " << out.string() << "\n";
}

// scaling --------------------------------------------------------------------

std::vector<std::pair<double, double>> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::pair<double, double>> pts;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line.front() == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) {
      if (pts.empty() && n == 1) continue;  // header
      throw ValidationError(path + ":" + std::to_string(n) + ": expected 'x,L'");
    }
    pts.emplace_back(x, y);
  }
  return pts;
}

void write_table(const std::string& out, const char* header, const std::vector<std::pair<double, double>>& rows) {
  std::string text = std::string(header) + "\n";
  char buf[96];
  for (auto [x, y] : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, y);
    text += buf;
  }
  if (out == "-") {
    std::cout << text;
  } else {
    const fs::path p = resolve_output(out, "table.csv");
    write_text_file(p, text);
    std::cout << "wrote " << rows.size() << " rows to " << p.string() << "\n";
  }
}

void cmd_derive_ratio() {
  const scaling::ConsistencyReport r = scaling::derive_token_ratio();
  print_json({{"ratio_k", q(r.ratio_k, "bits/token")},
              {"printed_ratio", q(r.printed_ratio, "bits/token")},
              {"eta_low", q(r.eta_low, "bits/bit")},
              {"eta_high", q(r.eta_high, "bits/bit")},
              {"assumed_entropy", q(r.assumed_entropy, "bits/token")},
              {"assumed_loss_low", q(r.assumed_loss_low, "bits/token")},
              {"assumed_loss_high", q(r.assumed_loss_high, "bits/token")}});
}

void cmd_fit(const std::string& points) {
  const auto pts = read_points_csv(points);
  const scaling::PowerLawFit f = scaling::fit_power_law(pts);
  json j{{"exponent", q(f.exponent, "1")},
         {"log_intercept", q(f.log_intercept, "ln(loss)")},
         {"residual_norm", q(f.residual_norm, "ln(loss)")},
         {"points", q(static_cast<double>(f.points), "count")}};
  if (f.law) j["scale_constant"] = q(f.law->scale_constant, "x");
  print_json(j);
}

struct TableOpts {
  double lo = 1.0, hi = 1e12;
  std::size_t points = 1000;
  std::string law = "data", out = "-";
};

void cmd_gap_table(const TableOpts& o) {
  std::vector<std::pair<double, double>> rows;
  for (double x : scaling::log_grid(o.lo, o.hi, o.points)) rows.emplace_back(x, scaling::gap_function(x));
  write_table(o.out, "x,f", rows);
}

void cmd_law_table(const TableOpts& o) {
  scaling::PowerLaw law;
  const char* header;
  if (o.law == "data") {
    law = scaling::kDataLaw;
    header = "tokens,loss";
  } else if (o.law == "model") {
    law = scaling::kModelBitsLaw;
    header = "param_bits,loss";
  } else {
    throw ValidationError("--law must be data or model");
  }
  std::vector<std::pair<double, double>> rows;
  for (double x : scaling::log_grid(o.lo, o.hi, o.points)) rows.emplace_back(x, scaling::eval_power_law(law, x));
  write_table(o.out, header, rows);
}

int guarded(const std::function<void()>& f) {
  try {
    f();
    return kExitOk;
  } catch (const IoError& e) {
    std::cerr << "iclab: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "iclab: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    std::cerr << "iclab: error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "iclab: error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-capacity laboratory"};
  app.require_subcommand(1);
  std::string simd;
  app.add_option("--simd", simd, "Kernel variant: scalar, avx2, neon (default: best available)");

  std::function<void()> action;

  GenOpts gen;
  auto* g = app.add_subcommand("gen", "Sample a source into a token stream file");
  g->add_option("--source", gen.source, "Source spec (JSON file or inline JSON)")->required();
  g->add_option("--length", gen.length, "Number of tokens");
  g->add_option("--seed", gen.seed, "RNG seed");
  g->add_option("--out", gen.out, "Output stream file");
  g->callback([&] { action = [&] { cmd_gen(gen); }; });

  CompressOpts comp;
  auto* c = app.add_subcommand("compress", "Arithmetic-code a stream and print the code report");
  c->add_option("--input", comp.input, "Stream file (or container with --decompress)")->required();
  c->add_option("--predictor", comp.predictor, "Predictor spec (JSON file or inline JSON)");
  c->add_option("--source", comp.source, "Source spec, for the oracle predictor");
  c->add_option("--mode", comp.mode, "online or frozen");
  c->add_option("--out", comp.out, "Output file");
  c->add_option("--checkpoint-out", comp.checkpoint_out, "Save the predictor state after encoding");
  c->add_option("--vocab-size", comp.vocab_size, "Vocabulary size for --decompress");
  c->add_flag("--decompress", comp.decompress, "Decode a container back to a stream");
  c->callback([&] { action = [&] { cmd_compress(comp); }; });

  RunOpts run;
  auto* r = app.add_subcommand("run", "Run a full experiment from a JSON config");
  r->add_option("--config", run.config, "Run config JSON")->required();
  r->add_option("--seed", run.seed, "Override the config seed");
  r->add_option("--length", run.length, "Override the stream length");
  r->add_option("--json", run.report.json_out, "Write the JSON report here");
  r->add_option("--text", run.report.text_out, "Write the text report here");
  r->add_option("--csv", run.report.csv_out, "Write the (D, L, eta) series here");
  r->add_option("--format", run.report.format, "Stdout format: json, text, csv-series");
  r->callback([&] { action = [&] { cmd_run(run); }; });

  LogOpts log;
  auto* a = app.add_subcommand("analyze-log", "Build an IC report from an external training log");
  a->add_option("--log", log.log, "JSONL training log")->required();
  a->add_option("--entropy-bits", log.entropy_bits, "Known entropy H in bits/token");
  a->add_option("--param-bits", log.param_bits, "Parameter size N in bits");
  a->add_option("--bit-width", log.bit_width, "Parameter width b for quantization verdicts");
  a->add_option("--window", log.window, "Records used for the initial-loss entropy estimate");
  a->add_option("--temperature", log.temperature, "Temperature in kelvin");
  a->add_option("--json", log.report.json_out, "Write the JSON report here");
  a->add_option("--text", log.report.text_out, "Write the text report here");
  a->add_option("--csv", log.report.csv_out, "Write the (D, L, eta) series here");
  a->add_option("--format", log.report.format, "Stdout format: json, text, csv-series");
  a->callback([&] { action = [&] { cmd_analyze_log(log); }; });

  double bits = 0.0, temperature = 300.0;
  auto* l = app.add_subcommand("landauer", "Minimum energy for transferring a number of bits");
  l->add_option("--bits", bits, "Information in bits")->required();
  l->add_option("--temperature", temperature, "Temperature in kelvin");
  l->callback([&] { action = [&] { cmd_landauer(bits, temperature); }; });

  QuantcheckOpts qc;
  auto* k = app.add_subcommand("quantcheck", "Lossless-quantization conditions");
  k->add_option("--eta", qc.eta, "Capacity before quantization")->required();
  k->add_option("--bit-width", qc.bit_width, "Width b before quantization");
  k->add_option("--target-bit-width", qc.target, "Width b' after quantization");
  k->add_option("--eta-after", qc.eta_after, "Measured capacity after quantization");
  k->callback([&] { action = [&] { cmd_quantcheck(qc); }; });

  QuantlabOpts ql;
  auto* m = app.add_subcommand("quantlab", "Quantization degradation matrix");
  m->add_option("--config", ql.config, "Standard matrix config JSON");
  m->add_option("--checkpoint", ql.checkpoint, "Predictor checkpoint to quantize instead");
  m->add_option("--stream", ql.stream, "Evaluation stream for --checkpoint");
  m->add_option("--entropy-bits", ql.entropy_bits, "H for eta (default log2 |V|)");
  m->add_option("--targets", ql.targets, "Target widths b'")->delimiter(',');
  m->add_option("--tolerance", ql.tolerance, "Degradation tolerance in bits/token");
  m->add_option("--results", ql.results, "JSONL results file (appended)");
  m->callback([&] { action = [&] { cmd_quantlab(ql); }; });

  auto* s = app.add_subcommand("scaling", "Scaling-law algebra");
  s->require_subcommand(1);
  s->add_subcommand("derive-ratio", "Token ratio and capacity bounds from the two laws")->callback([&] {
    action = cmd_derive_ratio;
  });
  std::string points;
  auto* sf = s->add_subcommand("fit", "Fit L = (x_c / x)^alpha to a CSV of x,L points");
  sf->add_option("--points", points, "CSV file")->required();
  sf->callback([&] { action = [&] { cmd_fit(points); }; });
  TableOpts table;
  auto* sg = s->add_subcommand("gap-table", "Tabulate the gap function on a log grid");
  auto* sl = s->add_subcommand("law-table", "Tabulate a reference power law on a log grid");
  for (auto* sub : {sg, sl}) {
    sub->add_option("--lo", table.lo, "Grid start");
    sub->add_option("--hi", table.hi, "Grid end");
    sub->add_option("--points", table.points, "Grid size");
    sub->add_option("--out", table.out, "CSV output ('-' for stdout)");
  }
  sl->add_option("--law", table.law, "data or model");
  sg->callback([&] { action = [&] { cmd_gap_table(table); }; });
  sl->callback([&] { action = [&] { cmd_law_table(table); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  return guarded([&] {
    if (!simd.empty()) kernels::select(kernels::parse_isa(simd));
    if (action) action();
  });
}
