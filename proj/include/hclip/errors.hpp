// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace hclip {

enum class ErrorKind {
  invalid_argument,
  malformed_input,
  precondition_violation,
  ill_posed,
  divergent_series,
  parse_error,
  infeasible_constants,
  insufficient_resolution,
  numerical_failure,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the engine when a state becomes non-finite.
class NumericalFailure : public Error {
 public:
  NumericalFailure(long long iteration, const std::string& message);

  long long iteration() const noexcept { return iteration_; }

 private:
  long long iteration_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace hclip
