#pragma once

#include <stdexcept>
#include <string>

namespace biasharness {

// Base of every exception the library throws. The C API maps each subclass
// onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: unknown variant, missing column, invalid flag combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad input data: unmappable label, malformed file, dataset mismatch.
class DataError : public Error {
 public:
  using Error::Error;
};

// A value failed a domain precondition (empty label, empty content, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace biasharness
