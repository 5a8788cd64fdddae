// SPDX-License-Identifier: Apache-2.0
#include "hclip/errors.hpp"

namespace hclip {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::malformed_input: return "malformed-input";
    case ErrorKind::precondition_violation: return "precondition-violation";
    case ErrorKind::ill_posed: return "ill-posed";
    case ErrorKind::divergent_series: return "divergent-series";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::infeasible_constants: return "infeasible-constants";
    case ErrorKind::insufficient_resolution: return "insufficient-resolution";
    case ErrorKind::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

NumericalFailure::NumericalFailure(long long iteration, const std::string& message)
    : Error(ErrorKind::numerical_failure,
            message + " at iteration " + std::to_string(iteration)),
      iteration_(iteration) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace hclip
