#pragma once

#include <stdexcept>
#include <string>

namespace memobs {

/// Raised for malformed inputs: bad indices, invalid regions, bad configs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot produce a trustworthy result
/// (singular systems, non-convergent series, eigensolver failure).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace memobs
