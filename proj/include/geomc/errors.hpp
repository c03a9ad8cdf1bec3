#pragma once

#include <stdexcept>
#include <string>

namespace geomc {

// Base for failures that signal an invalid numerical state (as opposed to a
// programming error). Integrators catch these and mark the step diverged.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonFiniteValue : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Position outside the support of a model (e.g. q <= 0 for the geodesic system).
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace geomc
