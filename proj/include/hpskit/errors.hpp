#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hpskit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class DegenerateRotation : public Error {
 public:
  using Error::Error;
};

class DegenerateRegistration : public Error {
 public:
  using Error::Error;
};

class NoPeak : public Error {
 public:
  using Error::Error;
};

/// Loader-side failures. Each carries enough location info to name the
/// offending file, frame or line in its message.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class MissingFile : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class CountMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonFiniteValue : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : ValidationError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hpskit
