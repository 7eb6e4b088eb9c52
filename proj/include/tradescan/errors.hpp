#pragma once

#include <stdexcept>
#include <string>

namespace tradescan {

// Bad or inconsistent configuration (unknown column, out-of-range parameter).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable input or unwritable output location.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An algorithm was called outside its precondition (too few points, k < 1, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input that is well formed but numerically unusable (non-finite point,
// zero variance regressor).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace tradescan
