#pragma once

#include <stdexcept>
#include <string>

namespace idense {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data or configuration. The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A required CSV column is missing.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Malformed file content; carries the 1-based line number when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : ValidationError(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Dependency arcs do not form a single rooted tree.
class TreeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A density was requested for a sample with no word tokens.
class UndefinedDensityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LookupError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UndefinedCorrelationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// File could not be opened, read or written. The CLI maps these to exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace idense
