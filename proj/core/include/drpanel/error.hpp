#pragma once

#include <stdexcept>
#include <string>

namespace drpanel {

/// Malformed or inconsistent input. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A well-formed problem the numerics could not resolve: non-convergence,
/// empty constraint sets, missing overlap. CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IdentificationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace drpanel
