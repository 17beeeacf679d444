#pragma once

#include <stdexcept>
#include <string>

namespace starstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: out-of-range parameters, malformed config, violated preconditions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A checked invariant failed (e.g. a negative distance term, a broken identity).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// The numerics did not converge or produced non-finite values.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace starstab
