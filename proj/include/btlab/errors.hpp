#pragma once

#include <stdexcept>
#include <string>

namespace btlab {

/// Invalid numeric parameter (nonpositive scale, s <= 1, degenerate window).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Evaluation requested outside the region where an oracle is valid.
struct DomainError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// An oracle cannot supply the requested derivative order or constant.
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition.
struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Singular frame: the structure is not in normal form at the point.
struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// No admissible parameter found (for example no positive T).
struct InfeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Quadrature or arithmetic produced a non-finite or unreliable result.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sampling grid too coarse for the requested spectral accuracy.
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed scenario file or expression.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace btlab
