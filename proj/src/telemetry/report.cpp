// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <sstream>

#include "iclab/telemetry.hpp"

namespace iclab::telemetry {
namespace {

json qj(const Quantity& v) { return json{{"value", v.value}, {"unit", v.unit}}; }

Quantity qparse(const json& j) {
  if (!j.is_object() || !j.contains("value") || !j.contains("unit"))
    throw ValidationError("report: quantity needs 'value' and 'unit'");
  return Quantity{j.at("value").get<double>(), j.at("unit").get<std::string>()};
}

std::optional<Quantity> qopt(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return qparse(j.at(key));
}

json entropy_json(const EntropyEntry& e) {
  json j{{"method", e.method}, {"value", qj(e.value)}};
  if (e.parameter) j["parameter"] = qj(*e.parameter);
  if (e.standard_error) j["standard_error"] = qj(*e.standard_error);
  return j;
}

EntropyEntry entropy_parse(const json& j) {
  EntropyEntry e;
  e.method = j.at("method").get<std::string>();
  e.value = qparse(j.at("value"));
  e.parameter = qopt(j, "parameter");
  e.standard_error = qopt(j, "standard_error");
  return e;
}

json capacity_json(const CapacityBlock& b) {
  json j{{"baseline", b.baseline},
         {"entropy", qj(b.entropy)},
         {"effective_info", qj(b.effective_info)},
         {"no_capacity", b.no_capacity}};
  if (b.eta) j["eta"] = qj(*b.eta);
  if (b.energy) j["energy"] = qj(*b.energy);
  return j;
}

CapacityBlock capacity_parse(const json& j) {
  CapacityBlock b;
  b.baseline = j.at("baseline").get<std::string>();
  b.entropy = qparse(j.at("entropy"));
  b.effective_info = qparse(j.at("effective_info"));
  b.no_capacity = j.at("no_capacity").get<bool>();
  b.eta = qopt(j, "eta");
  b.energy = qopt(j, "energy");
  return b;
}

const char* kSeriesColumns[][2] = {
    {"tokens", "tokens"}, {"loss", "bits/token"}, {"effective_info", "bits"}, {"eta", "bits/bit"}};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string num(double v) { return fmt("%.17g", v); }

}  // namespace

json ReportDocument::to_json() const {
  json j;
  j["provenance"] = provenance;
  j["inputs"] = inputs;
  j["entropy"] = entropy_json(entropy);
  j["entropy_estimates"] = json::array();
  for (const auto& e : entropy_estimates) j["entropy_estimates"].push_back(entropy_json(e));
  j["dataset_quality_entropy"] = qj(dataset_quality);
  j["tokens"] = qj(tokens);
  j["loss"] = qj(loss);
  j["param_bits"] = qj(param_bits);
  j["temperature"] = qj(temperature);
  j["energy_per_bit"] = qj(energy_per_bit);
  j["capacity"] = capacity_json(terminal);
  if (uniform_baseline) j["uniform_baseline"] = capacity_json(*uniform_baseline);

  json c{{"checked", conservation.checked}, {"note", conservation.note}};
  if (conservation.ideal_bits) c["ideal_bits"] = qj(*conservation.ideal_bits);
  if (conservation.prequential_bits) c["prequential_bits"] = qj(*conservation.prequential_bits);
  if (conservation.difference) c["difference"] = qj(*conservation.difference);
  if (conservation.holds) c["holds"] = *conservation.holds;
  j["conservation"] = c;

  j["quantization"] = json::array();
  for (const auto& v : quantization)
    j["quantization"].push_back({{"bit_width", qj({static_cast<double>(v.bit_width), "bits"})},
                                 {"target_bit_width", qj({static_cast<double>(v.target_bit_width), "bits"})},
                                 {"necessary_holds", v.necessary_holds},
                                 {"margin", qj({v.margin, "bits"})}});
  j["flags"] = flags;

  json cols = json::array();
  for (const auto& c2 : kSeriesColumns) cols.push_back({{"name", c2[0]}, {"unit", c2[1]}});
  json rows = json::array();
  for (const auto& r : series)
    rows.push_back({r.tokens, r.loss, r.effective_info, r.eta ? json(*r.eta) : json(nullptr)});
  j["series"] = {{"columns", cols}, {"rows", rows}};
  return j;
}

ReportDocument ReportDocument::from_json(const json& j) {
  try {
    ReportDocument d;
    d.provenance = j.at("provenance").get<std::string>();
    d.inputs = j.at("inputs");
    d.entropy = entropy_parse(j.at("entropy"));
    for (const auto& e : j.at("entropy_estimates")) d.entropy_estimates.push_back(entropy_parse(e));
    d.dataset_quality = qparse(j.at("dataset_quality_entropy"));
    d.tokens = qparse(j.at("tokens"));
    d.loss = qparse(j.at("loss"));
    d.param_bits = qparse(j.at("param_bits"));
    d.temperature = qparse(j.at("temperature"));
    d.energy_per_bit = qparse(j.at("energy_per_bit"));
    d.terminal = capacity_parse(j.at("capacity"));
    if (j.contains("uniform_baseline")) d.uniform_baseline = capacity_parse(j.at("uniform_baseline"));
    const json& c = j.at("conservation");
    d.conservation.checked = c.at("checked").get<bool>();
    d.conservation.note = c.at("note").get<std::string>();
    d.conservation.ideal_bits = qopt(c, "ideal_bits");
    d.conservation.prequential_bits = qopt(c, "prequential_bits");
    d.conservation.difference = qopt(c, "difference");
    if (c.contains("holds")) d.conservation.holds = c.at("holds").get<bool>();
    for (const auto& v : j.at("quantization"))
      d.quantization.push_back({static_cast<unsigned>(qparse(v.at("bit_width")).value),
                                static_cast<unsigned>(qparse(v.at("target_bit_width")).value),
                                v.at("necessary_holds").get<bool>(), qparse(v.at("margin")).value});
    d.flags = j.at("flags").get<std::vector<std::string>>();
    for (const auto& r : j.at("series").at("rows")) {
      SeriesRow row;
      row.tokens = r.at(0).get<std::uint64_t>();
      row.loss = r.at(1).get<double>();
      row.effective_info = r.at(2).get<double>();
      if (!r.at(3).is_null()) row.eta = r.at(3).get<double>();
      d.series.push_back(row);
    }
    return d;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "text") return ReportFormat::Text;
  if (s == "csv-series") return ReportFormat::CsvSeries;
  throw ValidationError("unknown report format '" + std::string(s) + "' (expected json|text|csv-series)");
}

std::string render_json(const ReportDocument& doc) { return doc.to_json().dump(2) + "\n"; }

std::string render_text(const ReportDocument& doc) {
  std::ostringstream o;
  auto line = [&](const char* label, const Quantity& v, const char* f = "%.6g") {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-22s %s %s\n", label, fmt(f, v.value).c_str(), v.unit.c_str());
    o << buf;
  };
  o << "IC report (" << doc.provenance << ")\n";
  line("entropy H", doc.entropy.value, "%.6f");
  o << "  method               " << doc.entropy.method << "\n";
  for (const auto& e : doc.entropy_estimates) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  estimate %-12s %.6f %s\n", e.method.c_str(), e.value.value, e.value.unit.c_str());
    o << buf;
  }
  line("tokens D", doc.tokens, "%.0f");
  line("loss L", doc.loss, "%.6f");
  line("parameters N", doc.param_bits, "%.0f");
  auto block = [&](const CapacityBlock& b) {
    o << "[" << b.baseline << " baseline]\n";
    line("  H", b.entropy, "%.6f");
    line("  I = D(H - L)", b.effective_info, "%.6g");
    if (b.eta)
      line("  eta", *b.eta, "%.6g");
    else
      o << "  eta                  undefined (no-capacity baseline)\n";
    if (b.energy)
      line("  E0", *b.energy, "%.6g");
    else
      o << "  E0                   n/a (negative information)\n";
  };
  block(doc.terminal);
  if (doc.uniform_baseline) block(*doc.uniform_baseline);
  line("temperature T", doc.temperature, "%.6g");
  line("energy per bit", doc.energy_per_bit, "%.6g");
  o << "conservation           ";
  if (doc.conservation.checked)
    o << (doc.conservation.holds.value_or(false) ? "holds" : "VIOLATED") << " (difference "
      << fmt("%.3g", doc.conservation.difference->value) << " bits)\n";
  else
    o << "not checked\n";
  for (const auto& v : doc.quantization) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "quantize %2u -> %2u bits  %s (margin %.6g bits)\n", v.bit_width,
                  v.target_bit_width, v.necessary_holds ? "feasible" : "infeasible", v.margin);
    o << buf;
  }
  o << "flags                 ";
  if (doc.flags.empty()) o << " none";
  for (const auto& f : doc.flags) o << " " << f;
  o << "\n";
  o << "series records         " << doc.series.size() << "\n";
  return o.str();
}

std::string render_csv_series(const ReportDocument& doc) {
  std::string out = "tokens,loss_bits_per_token,effective_info_bits,eta\n";
  for (const auto& r : doc.series) {
    out += std::to_string(r.tokens) + "," + num(r.loss) + "," + num(r.effective_info) + ",";
    if (r.eta) out += num(*r.eta);
    out += "\n";
  }
  return out;
}

std::string render(const ReportDocument& doc, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return render_json(doc);
    case ReportFormat::Text: return render_text(doc);
    case ReportFormat::CsvSeries: return render_csv_series(doc);
  }
  return {};
}

void emit_report(const ReportDocument& doc, ReportFormat format, const std::filesystem::path& path) {
  write_text_file(path, render(doc, format));
}

}  // namespace iclab::telemetry
