#pragma once

#include <stdexcept>
#include <string>

namespace octo {

/// Base of every error raised by the library. Each subclass maps onto one of
/// the error classes in the public contract (and onto a CLI exit code).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent model, config or dimensions.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Bad runtime input, e.g. a non-finite torque.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant (singular mass matrix, stale cache, ...).
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss, gradient or parameter during training.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Policies that cannot be bound to the requested robot/agent layout.
class CompositionError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class CorruptFileError : public Error {
 public:
  using Error::Error;
};

}  // namespace octo
