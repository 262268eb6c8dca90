#pragma once

#include <stdexcept>
#include <string>

namespace dexgrasp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or network shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (e.g. stepping a finished episode).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN/inf surfaced during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or incompatible file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace dexgrasp
