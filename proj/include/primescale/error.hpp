#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace primescale {

// Root of every exception thrown by the library. The three intermediate
// classes map onto the CLI exit codes (2 usage/config, 3 data, 4 numeric).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// Not enough data for the requested operation; `required` is the element
// count that would have satisfied it.
class RangeError : public DataError {
 public:
  RangeError(const std::string& what, std::size_t required)
      : DataError(what), required_(required) {}
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t required_;
};

class InputError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  enum class Code {
    BadMagic,
    BadVersion,
    Truncated,
    NonMonotone,
    BadContent,
    NotNumeric,
    NotPositive,
    Order,
  };

  ParseError(Code code, const std::string& what, std::size_t line = 0)
      : DataError(line ? what + " (line " + std::to_string(line) + ")" : what),
        code_(code),
        line_(line) {}

  Code code() const noexcept { return code_; }
  // 1-based line for text inputs, 0 for binary files.
  std::size_t line() const noexcept { return line_; }

 private:
  Code code_;
  std::size_t line_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateInputError : public NumericError {
 public:
  using NumericError::NumericError;
};

class FitError : public NumericError {
 public:
  using NumericError::NumericError;
};

class FactorizationError : public NumericError {
 public:
  FactorizationError(const std::string& what, double min_eigenvalue)
      : NumericError(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

// Process exit status for an exception escaping the CLI.
inline int exit_code(const std::exception& e) noexcept {
  if (dynamic_cast<const UsageError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  return 1;
}

}  // namespace primescale
