#pragma once

#include <stdexcept>
#include <string>

namespace stereo {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file content (bad magic, truncated payload,
/// shape-chain violation in a weight file, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Payload violates a data contract (NaN disparity, non-finite cost, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Inputs have incompatible or unusable dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameter or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Evaluation is undefined for the given inputs (e.g. no co-valid pixels).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (diverged training, non-finite loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace stereo
