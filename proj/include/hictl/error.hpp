#pragma once

#include <stdexcept>
#include <string>

namespace hictl {

// Each category maps to one CLI exit code (see tools/hictl.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, unknown keys, inconsistent settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, empty, malformed or insufficient input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Shape mismatch between operands.
class DimError : public Error {
 public:
  using Error::Error;
};

/// Mathematically undefined input, e.g. the cosine of a zero vector.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced during training or inference.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Corrupt, truncated or incompatible checkpoint file.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace hictl
