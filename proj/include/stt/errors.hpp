#pragma once

#include <stdexcept>
#include <string>

namespace stt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents do not line up for the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API precondition (e.g. backward on a non-scalar).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Bad user-supplied data: labels out of range, empty inputs, bad factors.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent model / stem / training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Checkpoint failures.
class VersionMismatchError : public Error {
 public:
  using Error::Error;
};

class CorruptFileError : public Error {
 public:
  using Error::Error;
};

class GeometryMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace stt
