#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nvp {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an input value was violated (NaN, negative rate, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A model could not be evaluated at the requested point, e.g. a vanishing
/// normalizing denominator.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// The ODE integrator could not make progress.
class IntegrationError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Malformed text input. `line` is 1-based; 0 when not attributable to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), detail_(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }
  /// Same error, message prefixed with the file it came from.
  ParseError in_file(const std::string& path) const {
    return ParseError(path, detail_, line_);
  }

 private:
  ParseError(const std::string& path, const std::string& what, std::size_t line)
      : Error(path + (line ? ":" + std::to_string(line) : std::string()) + ": " + what), detail_(what), line_(line) {}

  std::string detail_;
  std::size_t line_;
};

}  // namespace nvp
