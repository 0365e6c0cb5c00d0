#pragma once

#include <span>
#include <utility>

#include "etl/linalg.hpp"

namespace etl {

/// Parameter estimate with its error covariance after `step` updates.
struct FilterState {
  ParamVector z_hat;
  Matrix P;
  long step = 0;

  /// Symmetry within 1e-10, PSD within eigenvalue slack 1e-10, sizes consistent.
  void validate() const;
};

/// Disturbance model of the parameter filter.
///
/// sigma_w is the process disturbance covariance (n x n), sigma_z the
/// assumed parameter drift covariance (n(n+m) square), lambda the RLS
/// forgetting factor.
struct NoiseConfig {
  Matrix sigma_w;
  Matrix sigma_z;
  double lambda = 1.0;

  void validate() const;
};

struct KfStepTrace {
  Vector innovation;
  Matrix S;
  Matrix K;
  Matrix P_pred;
};

/// Diffuse or informative initial state.
FilterState initial_state(const ParamVector& z0, double p0_scale);

/// Least-squares fit of x_{t+1} = C_t z over the stacked data.
/// `states[t]` is the successor state produced by regressor `regressors[t]`.
ParamVector batch_ls(std::span<const Vector> states, std::span<const Regressor> regressors);

/// Recursive least squares; lambda < 1 enables exponential forgetting.
FilterState rls_step(const FilterState& state, const Vector& x_next, const Regressor& reg,
                     double lambda = 1.0);

/// One predict/update cycle of the Kalman parameter filter.
std::pair<FilterState, KfStepTrace> kf_step(const FilterState& state, const Vector& x_next,
                                            const Regressor& reg, const NoiseConfig& noise);

/// Mean squared componentwise difference.
double estimate_error_sq(const ParamVector& z_hat, const ParamVector& z_true);

}  // namespace etl
