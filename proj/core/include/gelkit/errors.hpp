#pragma once

#include <stdexcept>
#include <string>

namespace gelkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the model's parameter domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument combination (sizes, counts, divisibility).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Zero is not interior to the convex hull of the moment vectors, so the
/// likelihood ratio has no interior solution.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// The starting point of an outer optimization is infeasible.
class InfeasibleAtInit : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class SingularError : public Error {
 public:
  using Error::Error;
};

/// Profile interval endpoint could not be bracketed.
class BracketError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row, long column)
      : Error(what), row_(row), column_(column) {}
  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

class NonFiniteError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gelkit
