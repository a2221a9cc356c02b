#pragma once

#include <stdexcept>
#include <string>

namespace qtoc {

/// Argument outside the mathematical domain of an operation (negative
/// durations, asin arguments beyond [-1, 1], evaluation at a pole).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input data: ill-ordered switching times, amplitudes above the
/// bound, mismatched grids, unparsable files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver could not reach its target (projection onto the
/// fidelity constraint, gate-time search without a hit).
class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qtoc
