#pragma once

#include <stdexcept>
#include <string>

namespace fkhom {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Coefficient or tensor fails the ellipticity bounds.
struct EllipticityError : Error {
  using Error::Error;
};

/// Empty mask, domain outside the grid window, or otherwise ill-posed geometry.
struct DomainError : Error {
  using Error::Error;
};

/// Iterative solver stopped before reaching its tolerance.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (final residual " + std::to_string(residual) + ")"), residual(residual) {}
  double residual;
};

/// A computed result violates a property that should hold by construction.
struct InconsistencyError : Error {
  using Error::Error;
};

struct RangeError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

/// The optimizer emptied or shrank the domain below a resolvable size.
struct CollapseError : Error {
  using Error::Error;
};

}  // namespace fkhom
