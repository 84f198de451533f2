#pragma once

#include <stdexcept>
#include <string>

namespace pedcross {

/// Base for all errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value; message names the offending field.
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed or inconsistent input data (shapes, ranges, file contents).
struct InputError : Error {
  using Error::Error;
};

/// Operation called on an object in a state that cannot support it.
struct StateError : Error {
  using Error::Error;
};

/// Numerical breakdown (singular matrix, non-finite intermediate).
struct NumericalError : Error {
  using Error::Error;
};

/// Serialized artifact has the wrong version or shape header.
struct FormatError : Error {
  using Error::Error;
};

}  // namespace pedcross
