#pragma once

#include <stdexcept>
#include <string>

namespace etl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A covariance that must be positive definite failed its Cholesky factorization.
class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

/// Regression data does not determine the parameters; carries the rank found.
class NotPersistentlyExcitingError : public Error {
 public:
  NotPersistentlyExcitingError(int rank, int required)
      : Error("regressor data not persistently exciting: rank " + std::to_string(rank) +
              " < " + std::to_string(required)),
        rank_(rank),
        required_(required) {}

  int rank() const noexcept { return rank_; }
  int required() const noexcept { return required_; }

 private:
  int rank_;
  int required_;
};

/// Innovation covariance not invertible, usually a misconfigured Sigma_w.
class DegenerateNoiseError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Controller synthesis failed (model not stabilizable).
class SynthesisError : public Error {
 public:
  using Error::Error;
};

/// Scenario or configuration failed validation. `field()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A closed-loop run failed; `step()` is the step index being executed.
class SimulationError : public Error {
 public:
  SimulationError(long step, const std::string& message)
      : Error("step " + std::to_string(step) + ": " + message), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace etl
