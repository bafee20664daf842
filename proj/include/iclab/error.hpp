#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>
#include <string>

namespace iclab {

/// Invalid input: bad spec, out-of-range token, violated precondition.
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File or stream failure. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wraps an error with the pipeline stage it came from ("sample", "codec", ...).
class StageError : public ValidationError {
 public:
  StageError(std::string stage, const std::string& what)
      : ValidationError(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace iclab
