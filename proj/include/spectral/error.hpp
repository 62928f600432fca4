#pragma once

#include <stdexcept>
#include <string>

namespace spectral {

/// Root of every error thrown by the library. The CLI maps subclasses to
/// exit codes, so new failure kinds should derive from one of these.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad caller-supplied argument (k > n, even SG window, ...).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Tensor or matrix dimensions that do not line up.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Operation called in the wrong object state (backward before forward).
class StateError : public Error {
public:
  using Error::Error;
};

/// Data that parsed but breaks an invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Malformed file structure (ragged rows, missing header).
class FormatError : public Error {
public:
  using Error::Error;
};

/// A cell that is not a number.
class ParseError : public FormatError {
public:
  using FormatError::FormatError;
};

}  // namespace spectral
