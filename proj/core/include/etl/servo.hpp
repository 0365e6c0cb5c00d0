#pragma once

#include <random>

#include "etl/linalg.hpp"

namespace etl {

/// DC motor, gear box, elastic shaft and load.
struct ServoParams {
  double k_theta = 1280.2;  // torsional rigidity [N m / rad]
  double rho = 20.0;        // gear ratio
  double J_L = 10.0;        // load inertia [kg m^2]
  double J_M = 0.5;         // motor inertia [kg m^2]
  double beta_L = 25.0;     // load viscous friction [N m s / rad]
  double beta_M = 0.1;      // motor viscous friction [N m s / rad]
  double K_T = 10.0;        // motor constant [N m / A]
  double R_a = 20.0;        // armature resistance [Ohm]

  void validate() const;
};

/// States: load angle, load velocity, motor angle, motor velocity. Input: voltage.
ContinuousModel servo_continuous(const ServoParams& p);

/// Row g with g x equal to the shaft torque, used for |g x| <= limit.
Vector servo_torsion_row(const ServoParams& p);

/// Zero-mean Gaussian with a fixed covariance; a PSD (possibly singular)
/// covariance is factored through its eigen-decomposition.
class GaussianNoise {
 public:
  explicit GaussianNoise(const Matrix& covariance);

  Vector sample(std::mt19937_64& rng) const;
  int dim() const { return static_cast<int>(factor_.rows()); }

 private:
  Matrix factor_;
};

/// x+ = A x + B u + w, w ~ N(0, Sigma_w).
Vector step_plant(const LinearModel& model, const Vector& x, const Vector& u,
                  const GaussianNoise& noise, std::mt19937_64& rng);

}  // namespace etl
