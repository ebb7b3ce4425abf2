#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hpotts {

// All library errors derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Site outside the grid.
class CoordinateError : public Error {
 public:
  using Error::Error;
};

// Parameter outside the supported regime (negative beta, sigma <= 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Emission model inconsistent with a label field (class-count mismatch).
class ModelError : public Error {
 public:
  using Error::Error;
};

// Evidence missing or with dimensions that do not match the field.
class ContextError : public Error {
 public:
  using Error::Error;
};

// Operation not defined for this input (e.g. no interior sites).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; the message names line and token position.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Root finder ran out of iterations. Carries the best bracket seen.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double lo, double hi)
      : Error(what), bracket_(lo, hi) {}

  std::pair<double, double> bracket() const { return bracket_; }

 private:
  std::pair<double, double> bracket_;
};

}  // namespace hpotts
