#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nkg {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value lies outside the domain of a function (e.g. negative modulus).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument combination supplied by the caller.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced while evaluating a functional.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t node)
      : Error(what + " (node " + std::to_string(node) + ")"), node_(node) {}
  explicit NumericError(const std::string& what) : Error(what) {}

  std::size_t node() const { return node_; }

 private:
  std::size_t node_ = 0;
};

/// An iterative solver failed to meet its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}

  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// No ground state was detected for the requested parameters.
class ExistenceError : public Error {
 public:
  using Error::Error;
};

/// A potential does not satisfy a hypothesis that an operation requires.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// The time integrator produced non-finite values.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double time) : Error(what), time_(time) {}

  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace nkg
