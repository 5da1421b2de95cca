#ifndef CONVEXINEQ_ERRORS_HPP
#define CONVEXINEQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace convexineq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument lies outside the range where an operation is defined.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The inputs violate a theorem's hypotheses (β range, p range, admissibility).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// β or p outside the closed-form formula's range.
class OutOfRangeError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Exponent outside [lower, threshold]; carries the closed-form threshold.
class ThresholdError : public PreconditionError {
 public:
  ThresholdError(const std::string& what, double threshold) : PreconditionError(what), threshold_(threshold) {}
  double threshold() const { return threshold_; }

 private:
  double threshold_;
};

/// A field or potential left its declared domain at an evaluated point.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value from a user-supplied evaluator.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Object used in a state that does not support the operation.
class StateError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Eigensolver or linear solver failure.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an input contract (e.g. nonzero-mean right-hand side).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Metropolis step tuning did not reach an acceptable acceptance rate.
class TuningError : public Error {
 public:
  using Error::Error;
};

/// Malformed run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace convexineq

#endif  // CONVEXINEQ_ERRORS_HPP
