#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wreath {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegreeMismatch : public Error {
 public:
  using Error::Error;
};

/// A product machine grew beyond the configured state cap.
class StateCapExceeded : public Error {
 public:
  using Error::Error;
};

/// A level quotient would need more points than the configured cap.
class PointCapExceeded : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// Subgroup relation violated where an operation requires it (H <= G, seed in ambient, ...).
class NotASubgroup : public Error {
 public:
  using Error::Error;
};

/// Parse or resolution failure in the group-definition language.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column),
        message_(message) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string message_;
};

}  // namespace wreath
