#pragma once

#include <stdexcept>
#include <string>

namespace vlx {

/// Thrown when an input violates a documented precondition: bad grid sizes,
/// out-of-range parameters, malformed curve data, inconsistent configuration.
/// The command-line driver maps this class to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation leaves its domain of validity at run time:
/// branch-cut violation of the complexified modulus, chart inversion that
/// does not converge, sheets touching, analytic-continuation overflow,
/// blow-up guard trips.  The command-line driver maps this class to exit
/// code 3.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vlx
