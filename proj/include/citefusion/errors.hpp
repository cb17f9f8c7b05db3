#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace citefusion {

// Base for every error raised by the library. Callers that only care about
// "something in citefusion failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error(line == 0 ? message
                        : message + " at line " + std::to_string(line)),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A caller broke an operation's precondition (shape mismatch, bad config).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The requested state is not available yet (e.g. predicting with an
// untrained expert).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace citefusion
