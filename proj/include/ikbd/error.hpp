#pragma once

#include <stdexcept>
#include <string>

namespace ikbd {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Phrase text that cleans to nothing.
class RejectedPhrase : public Error {
 public:
  using Error::Error;
};

/// Structurally valid input that breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or message. Carries the 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced by a numeric primitive.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ikbd
