#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace wclmmse {

/// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity in an input matrix.
class NumericInputError : public Error {
 public:
  using Error::Error;
};

/// A matrix that had to be inverted (or inverse-square-rooted) was
/// numerically singular. Carries the offending eigenvalue when known and an
/// estimate of the condition number, since this failure is itself a
/// conditioning diagnostic.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, Eigen::Index index, double value,
                   double condition)
      : Error(what), index_(index), value_(value), condition_(condition) {}

  Eigen::Index index() const noexcept { return index_; }
  double value() const noexcept { return value_; }
  double condition() const noexcept { return condition_; }

 private:
  Eigen::Index index_;
  double value_;
  double condition_;
};

class RankError : public Error {
 public:
  using Error::Error;
};

class UndefinedConditionError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class InvalidSpectrumError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class InvalidWeightError : public Error {
 public:
  using Error::Error;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. line() is 1-based; 0 means "not tied to a line".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace wclmmse
