// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include "iclab/error.hpp"
#include "iclab/json_io.hpp"

namespace iclab {

json source_to_json(const Source& source) {
  json doc;
  switch (source.kind()) {
    case Source::Kind::Iid:
      doc["kind"] = "iid";
      doc["probabilities"] = source.probabilities();
      break;
    case Source::Kind::Markov: {
      doc["kind"] = "markov";
      doc["vocab_size"] = source.vocab_size();
      doc["order"] = source.order();
      json rows = json::array();
      for (const auto& [ctx, probs] : source.transitions())
        rows.push_back({{"context", ctx}, {"probabilities", probs}});
      doc["transitions"] = std::move(rows);
      break;
    }
    case Source::Kind::Deterministic:
      doc["kind"] = "deterministic";
      doc["vocab_size"] = source.vocab_size();
      doc["cycle"] = source.cycle();
      break;
  }
  return doc;
}

Source source_from_json(const json& doc) {
  try {
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "iid") return Source::iid(doc.at("probabilities").get<std::vector<double>>());
    if (kind == "uniform") return Source::uniform(doc.at("vocab_size").get<std::uint32_t>());
    if (kind == "binary_sticky") return Source::binary_sticky(doc.at("stay").get<double>());
    if (kind == "deterministic")
      return Source::deterministic(doc.at("vocab_size").get<std::uint32_t>(),
                                   doc.at("cycle").get<std::vector<Token>>());
    if (kind == "markov") {
      TransitionMap t;
      for (const auto& row : doc.at("transitions")) {
        Context ctx = row.at("context").get<Context>();
        if (t.contains(ctx)) throw ValidationError("markov source: duplicate context in transition map");
        t.emplace(std::move(ctx), row.at("probabilities").get<std::vector<double>>());
      }
      return Source::markov(doc.at("vocab_size").get<std::uint32_t>(), doc.at("order").get<unsigned>(),
                            std::move(t));
    }
    throw ValidationError("source spec: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("source spec: ") + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace iclab
