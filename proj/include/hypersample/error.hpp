#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hypersample {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A structural invariant does not hold (bad ids, bad ratios, bad config).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes are incompatible.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity showed up where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypersample
