#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noisyuat {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, violated preconditions, malformed configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A point or argument outside the mathematical domain of an operation.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// New task data is not compatible with a trained cluster structure.
class SimilarityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Singular or non-finite numerics.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : IoError(what + " (at byte " + std::to_string(byte_offset) + ")"),
        message_(what),
        offset_(byte_offset) {}

  const std::string& message() const noexcept { return message_; }
  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::string message_;
  std::size_t offset_;
};

}  // namespace noisyuat
