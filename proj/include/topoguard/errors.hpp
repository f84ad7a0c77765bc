#pragma once

#include <stdexcept>
#include <string>

namespace topoguard {

// Invalid arguments, shapes, or configuration. CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mismatched matrix/vector dimensions.
class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Malformed or inconsistent input data. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values, degenerate normalization, non-convergence. CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace topoguard
