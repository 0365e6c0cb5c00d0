#include "etl/estimators.hpp"

#include <cmath>
#include <string>

namespace etl {

namespace {

void check_step_inputs(const FilterState& state, const Vector& x_next, const Regressor& reg) {
  const int n = state.z_hat.n();
  const int dof = state.z_hat.size();
  if (state.P.rows() != dof || state.P.cols() != dof)
    throw DimensionError("filter: covariance does not match parameter length");
  if (x_next.size() != n) throw DimensionError("filter: successor state has wrong length");
  if (reg.C.rows() != n || reg.C.cols() != dof)
    throw DimensionError("filter: regressor shape does not match the parameter vector");
}

}  // namespace

void FilterState::validate() const {
  const int dof = z_hat.size();
  if (P.rows() != dof || P.cols() != dof)
    throw DimensionError("FilterState: covariance size does not match estimate");
  if (!P.allFinite() || !z_hat.values().allFinite())
    throw NonFiniteError("FilterState: non-finite entries");
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw Error("FilterState: covariance not symmetric");
  if (!is_psd(P)) throw Error("FilterState: covariance not positive semidefinite");
}

void NoiseConfig::validate() const {
  if (sigma_w.rows() != sigma_w.cols() || sigma_w.rows() == 0)
    throw DimensionError("NoiseConfig: sigma_w must be square");
  if (sigma_z.rows() != sigma_z.cols()) throw DimensionError("NoiseConfig: sigma_z must be square");
  if (!is_psd(sigma_w) || !is_psd(sigma_z))
    throw Error("NoiseConfig: covariances must be symmetric PSD");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error("NoiseConfig: lambda must lie in (0, 1]");
}

FilterState initial_state(const ParamVector& z0, double p0_scale) {
  const int dof = z0.size();
  return FilterState{z0, p0_scale * Matrix::Identity(dof, dof), 0};
}

ParamVector batch_ls(std::span<const Vector> states, std::span<const Regressor> regressors) {
  if (states.size() != regressors.size() || states.empty())
    throw DimensionError("batch_ls: need one successor state per regressor");
  const Eigen::Index n = regressors.front().C.rows();
  const Eigen::Index dof = regressors.front().C.cols();
  const Eigen::Index m = dof / n - n;

  Matrix C(n * static_cast<Eigen::Index>(regressors.size()), dof);
  Vector X(C.rows());
  for (std::size_t t = 0; t < regressors.size(); ++t) {
    if (regressors[t].C.rows() != n || regressors[t].C.cols() != dof || states[t].size() != n)
      throw DimensionError("batch_ls: inconsistent data shapes");
    C.middleRows(static_cast<Eigen::Index>(t) * n, n) = regressors[t].C;
    X.segment(static_cast<Eigen::Index>(t) * n, n) = states[t];
  }
  const int rank = numerical_rank(C, 1e-9);
  if (rank < dof) throw NotPersistentlyExcitingError(rank, static_cast<int>(dof));
  Vector z = C.colPivHouseholderQr().solve(X);
  return ParamVector(std::move(z), static_cast<int>(n), static_cast<int>(m));
}

FilterState rls_step(const FilterState& state, const Vector& x_next, const Regressor& reg,
                     double lambda) {
  check_step_inputs(state, x_next, reg);
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error("rls_step: lambda must lie in (0, 1]");
  const Matrix& C = reg.C;
  const Eigen::Index n = C.rows();
  const Matrix PCt = state.P * C.transpose();
  const Matrix denom = lambda * Matrix::Identity(n, n) + C * PCt;
  Eigen::LLT<Matrix> llt(denom);
  if (llt.info() != Eigen::Success) throw DegenerateNoiseError("rls_step: singular gain denominator");
  const Matrix K = llt.solve(PCt.transpose()).transpose();

  FilterState out;
  Vector z = state.z_hat.values() + K * (x_next - C * state.z_hat.values());
  out.z_hat = ParamVector(std::move(z), state.z_hat.n(), state.z_hat.m());
  out.P = symmetrized((state.P - K * PCt.transpose()) / lambda);
  out.step = state.step + 1;
  return out;
}

std::pair<FilterState, KfStepTrace> kf_step(const FilterState& state, const Vector& x_next,
                                            const Regressor& reg, const NoiseConfig& noise) {
  check_step_inputs(state, x_next, reg);
  const Matrix& C = reg.C;
  if (noise.sigma_w.rows() != C.rows() || noise.sigma_z.rows() != state.P.rows())
    throw DimensionError("kf_step: noise covariances do not match the filter dimensions");

  KfStepTrace trace;
  trace.P_pred = state.P + noise.sigma_z;
  trace.innovation = x_next - C * state.z_hat.values();
  const Matrix PCt = trace.P_pred * C.transpose();
  trace.S = symmetrized(C * PCt + noise.sigma_w);
  Eigen::LLT<Matrix> llt(trace.S);
  if (llt.info() != Eigen::Success)
    throw DegenerateNoiseError("kf_step: innovation covariance not invertible; check sigma_w");
  trace.K = llt.solve(PCt.transpose()).transpose();

  FilterState out;
  Vector z = state.z_hat.values() + trace.K * trace.innovation;
  out.z_hat = ParamVector(std::move(z), state.z_hat.n(), state.z_hat.m());
  out.P = symmetrized(trace.P_pred - trace.K * PCt.transpose());
  out.step = state.step + 1;
  return {std::move(out), std::move(trace)};
}

double estimate_error_sq(const ParamVector& z_hat, const ParamVector& z_true) {
  if (z_hat.size() != z_true.size() || z_hat.size() == 0)
    throw DimensionError("estimate_error_sq: length mismatch");
  return (z_hat.values() - z_true.values()).squaredNorm() / static_cast<double>(z_hat.size());
}

}  // namespace etl
