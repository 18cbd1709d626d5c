#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace glyco {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A rate schedule does not cover the requested time span.
class ScheduleGap : public Error {
public:
  using Error::Error;
};

/// The Gaussian covariance collapsed (non-positive or non-finite variance).
class DegenerateParameters : public Error {
public:
  using Error::Error;
};

/// Fewer measurements than the estimator needs.
class InsufficientData : public Error {
public:
  using Error::Error;
};

/// The scalar system has no input authority (b == 0).
class Uncontrollable : public Error {
public:
  using Error::Error;
};

/// Integration produced a non-finite state.
class SimulationError : public Error {
public:
  using Error::Error;
};

/// Configuration file could not be read or failed validation.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed input data; carries the 1-based line number when known.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_ = 0;
};

}  // namespace glyco
