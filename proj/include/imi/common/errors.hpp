#pragma once

#include <stdexcept>
#include <string>

namespace imi {

/// Base class for every error raised by the library. Each subclass maps to
/// one failure family so callers (the CLI, the HTTP layer) can translate it
/// into an exit code or status without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown layer, channel out of range, malformed unit string.
class AddressingError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values in activations, gradients or losses.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or precondition on user-supplied parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data does not satisfy the invariants of its schema.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Degenerate statistical input (e.g. a percentile under total ties).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Out-of-order or unknown request in a session protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Operation not permitted in the current lifecycle state.
class StateError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage's prerequisite artifact is missing.
class DependencyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace imi
