#pragma once

// SPDX-License-Identifier: Apache-2.0

// JSON documents for source specifications.
//
//   {"kind": "iid", "probabilities": [0.25, 0.25, 0.25, 0.25]}
//   {"kind": "markov", "vocab_size": 2, "order": 1,
//    "transitions": [{"context": [0], "probabilities": [0.9, 0.1]},
//                    {"context": [1], "probabilities": [0.1, 0.9]}]}
//   {"kind": "deterministic", "vocab_size": 2, "cycle": [0, 1]}
//
// Shorthands accepted on input only:
//   {"kind": "uniform", "vocab_size": 256}
//   {"kind": "binary_sticky", "stay": 0.9}

#include <filesystem>
#include <json.hpp>

#include "iclab/sources.hpp"

namespace iclab {

using json = nlohmann::json;

json source_to_json(const Source& source);
Source source_from_json(const json& doc);

/// Reads and parses a JSON file; IoError if unreadable, ValidationError if malformed.
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace iclab
