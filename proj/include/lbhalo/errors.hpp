#pragma once

#include <stdexcept>
#include <string>

namespace lbhalo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A lattice coordinate outside the interior of a field.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Macroscopic velocity requested at a site with zero density.
class ZeroDensityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or parameters outside the stable range.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Integer overflow in a size computation.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// Cartesian coordinate outside a non-periodic dimension.
class BoundaryError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: bad decomposition, mismatched buffer sizes, unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API called in the wrong state, e.g. ending an exchange twice.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Work between exchange start and end modified the halo shell.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace lbhalo
