#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ivobs {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Function evaluated outside its domain (sqrt of a negative, non-finite result).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Real division by zero or interval division by an interval containing zero.
class DivisionByZero : public DomainError {
 public:
  using DomainError::DomainError;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)), position_(position) {}

  /// Zero-based character offset into the parsed text.
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnknownIdentifier : public SyntaxError {
 public:
  using SyntaxError::SyntaxError;
};

class IndexOutOfRange : public SyntaxError {
 public:
  using SyntaxError::SyntaxError;
};

/// Gain LP produced no certificate (optimal s* >= 0, or the LP failed).
class SynthesisFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace ivobs
