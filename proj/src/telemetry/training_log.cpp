// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <sstream>

#include "iclab/telemetry.hpp"

namespace iclab::telemetry {
namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ValidationError("training log line " + std::to_string(line) + ": " + what);
}

}  // namespace

TrainingTrace parse_training_log(std::string_view text) {
  TrainingTrace trace;
  trace.unit = LossUnit::Bits;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) fail(line_no, "record must be a JSON object");
    if (!rec.contains("tokens_seen") || !rec["tokens_seen"].is_number_integer())
      fail(line_no, "tokens_seen must be an integer");
    if (rec["tokens_seen"].is_number_integer() && !rec["tokens_seen"].is_number_unsigned())
      fail(line_no, "tokens_seen must be non-negative");
    if (!rec.contains("loss") || !rec["loss"].is_number()) fail(line_no, "loss must be a number");

    LossUnit unit = LossUnit::Nats;
    if (rec.contains("loss_unit")) {
      if (!rec["loss_unit"].is_string()) fail(line_no, "loss_unit must be a string");
      try {
        unit = parse_loss_unit(rec["loss_unit"].get<std::string>());
      } catch (const ValidationError& e) {
        fail(line_no, e.what());
      }
    }

    TraceRecord r;
    r.tokens_seen = rec["tokens_seen"].get<std::uint64_t>();
    const double loss = rec["loss"].get<double>();
    if (!std::isfinite(loss) || loss < 0.0) fail(line_no, "loss must be finite and >= 0");
    r.loss = BitsPerToken::from(loss, unit).value;
    if (!trace.records.empty() && r.tokens_seen <= trace.records.back().tokens_seen)
      fail(line_no, "tokens_seen must be strictly increasing (" + std::to_string(r.tokens_seen) +
                        " after " + std::to_string(trace.records.back().tokens_seen) + ")");
    trace.records.push_back(r);
  }
  if (trace.records.empty()) throw ValidationError("empty trace");
  return trace;
}

TrainingTrace read_training_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return parse_training_log(buf.str());
}

}  // namespace iclab::telemetry
