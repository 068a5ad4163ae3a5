#pragma once

#include <stdexcept>
#include <string>

namespace cmie {

/// Base of all library errors. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration (exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Model container does not match its manifest.
class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};

/// Training diverged (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace cmie
