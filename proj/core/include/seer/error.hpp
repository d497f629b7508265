#pragma once

#include <stdexcept>
#include <string>

namespace seer {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold (non-finite value, bad size, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Stream points arrived with a non-increasing index.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// Feature dimensionality disagrees with what a model or stream expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A classifier could not be fitted.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration. The message lists every problem found, one per line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based row the problem was found on (0 = file level).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace seer
