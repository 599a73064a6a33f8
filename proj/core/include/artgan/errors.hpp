#pragma once

#include <stdexcept>
#include <string>

namespace artgan {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters, geometry, or config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced or consumed somewhere numeric.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File-system and format failures. The message always names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace artgan
