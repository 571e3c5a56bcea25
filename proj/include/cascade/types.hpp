#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cascade {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Root of every error the library raises on purpose.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document (bad JSON, missing or mistyped field).
class ParseError : public Error {
public:
  using Error::Error;
};

/// Input parsed but violates a domain invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Numerical failure: singular block, divergence, non-convergence.
class NumericalError : public Error {
public:
  using Error::Error;
};

class ReductionError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class NonConvergenceError : public NumericalError {
public:
  NonConvergenceError(const std::string& what, double last_residual)
      : NumericalError(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

private:
  double last_residual_;
};

/// A metric requested on input for which it is undefined (h = 0, zero load, ...).
class MetricError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace cascade
