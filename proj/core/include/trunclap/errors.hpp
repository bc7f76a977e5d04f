#pragma once

#include <stdexcept>
#include <string>

namespace trunclap {

/// Declared tail growth of an integrand is too strong for the kernel: the
/// integral does not exist.
struct DivergentTail : std::domain_error {
  using std::domain_error::domain_error;
};

/// Declared interior singularity exponent >= 1: the integral does not exist.
struct DivergentSingularity : std::domain_error {
  using std::domain_error::domain_error;
};

/// Quadrature or a root solve exhausted its budget without certifying the
/// requested tolerance.
struct NonConvergent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidExponent : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidParams : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidMatchRadius : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Profile flags do not certify the requested representation formula.
struct IneligibleProfile : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonSymmetric : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidMode : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct BracketNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace trunclap
