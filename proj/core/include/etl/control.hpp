#pragma once

#include <optional>
#include <span>
#include <vector>

#include "etl/estimators.hpp"
#include "etl/qp.hpp"

namespace etl {

/// Polyhedral state set {x : G x <= h, lower <= x <= upper}. Empty G or
/// bound vectors mean "no constraint of that kind"; infinite bounds are skipped.
struct StateConstraints {
  Matrix G;
  Vector h;
  Vector lower;
  Vector upper;

  bool contains(const Vector& x, double tol = 1e-6) const;
  double violation(const Vector& x) const;
};

struct InputBox {
  Vector lower;
  Vector upper;

  bool contains(const Vector& u, double tol = 1e-6) const;
  double violation(const Vector& u) const;
  Vector saturate(const Vector& u) const;
};

/// Terminal set X_N: the origin, or the stage state set.
enum class TerminalSet { Zero, StateSet };

struct MpcConfig {
  Matrix Q;
  Matrix R;
  Matrix QN;
  int horizon = 6;
  double nu = 0.0;
  StateConstraints X;
  InputBox U;
  TerminalSet terminal = TerminalSet::Zero;
  bool rollout_includes_drift = true;
  int max_iterations = 200;
  double fd_step = 1e-6;

  /// Checks sizes against (n, m), N >= 1, R positive definite, Q and QN PSD,
  /// nu >= 0 and that every constraint set contains the origin.
  void validate(int n, int m) const;
};

enum class MpcStatus { Solved, MaxIterations, Infeasible };

const char* to_string(MpcStatus status);

struct MpcSolution {
  std::vector<Vector> states;  // x_0 .. x_N
  std::vector<Vector> inputs;  // u_0 .. u_{N-1}
  double cost = 0.0;  // quadratic cost; full cost (with the nu term) for experiment solves
  std::vector<double> cov_trace_path;  // trace(P_k|k), k = 0 .. N; empty for nominal solves
  MpcStatus status = MpcStatus::Infeasible;
  int iterations = 0;
};

/// Predicted filter covariances P_0|0 .. P_N|N along a planned trajectory.
std::vector<Matrix> covariance_rollout(std::span<const Vector> plan_states,
                                       std::span<const Vector> plan_inputs, const Matrix& P0,
                                       const NoiseConfig& noise, bool include_drift = true);

/// Condensed finite-horizon problem for one (model, config) pair. The
/// prediction matrices depend only on the model, so they are built once.
class CondensedMpc {
 public:
  CondensedMpc(const LinearModel& model, const MpcConfig& cfg);

  /// QP in the stacked input sequence for initial state x0.
  QpProblem problem(const Vector& x0) const;
  std::vector<Vector> rollout(const Vector& x0, const Vector& inputs) const;
  double quadratic_cost(const Vector& x0, const Vector& inputs) const;
  /// Quadratic cost plus nu * sum_{k=1..N} trace(P_k|k).
  double full_cost(const Vector& x0, const Vector& inputs, const Matrix& P0,
                   const NoiseConfig& noise) const;

  const LinearModel& model() const { return model_; }
  const MpcConfig& config() const { return cfg_; }
  int num_inputs() const { return horizon_ * m_; }

 private:
  double trace_term(const Vector& x0, const Vector& inputs, const Matrix& P0,
                    const NoiseConfig& noise) const;

  LinearModel model_;
  MpcConfig cfg_;
  int n_;
  int m_;
  int horizon_;
  Matrix Sx_;  // (N+1)n x n
  Matrix Su_;  // (N+1)n x Nm
  Matrix H_;   // Hessian of the condensed quadratic cost
  Matrix F_;   // linear term f = F x0
  Matrix W_;   // constant term x0^T W x0
  Matrix A_in_u_;
  Vector b_in_const_;
  Matrix b_in_x0_;
  Matrix A_eq_u_;
  Matrix b_eq_x0_;

  friend MpcSolution experiment_mpc_solve(const CondensedMpc&, const Vector&, const Matrix&,
                                          const NoiseConfig&);
};

MpcSolution nominal_mpc_solve(const CondensedMpc& mpc, const Vector& x0);
MpcSolution experiment_mpc_solve(const CondensedMpc& mpc, const Vector& x0, const Matrix& P0,
                                 const NoiseConfig& noise);

MpcSolution nominal_mpc_solve(const LinearModel& model, const Vector& x0, const MpcConfig& cfg);
MpcSolution experiment_mpc_solve(const LinearModel& model, const Vector& x0, const Matrix& P0,
                                 const NoiseConfig& noise, const MpcConfig& cfg);

/// Largest constraint or dynamics violation of a plan (states at k = 1..N).
double plan_violation(const MpcSolution& sol, const LinearModel& model, const MpcConfig& cfg);

/// Infinite-horizon LQR gain u = -K x by Riccati iteration; empty if the
/// iteration diverges, which is how unstabilizable pairs show up.
std::optional<Matrix> dlqr_gain(const LinearModel& model, const Matrix& Q, const Matrix& R);

/// Mutable controller bound to a model. Rebinding recomputes the condensed
/// problem and the LQR fallback gain; not thread-safe.
class MpcController {
 public:
  MpcController(const LinearModel& model, MpcConfig cfg);

  /// Throws SynthesisError if the model is not stabilizable; the previous
  /// model stays in place in that case.
  void update(const LinearModel& model);

  const LinearModel& model() const { return mpc_->model(); }
  const MpcConfig& config() const { return cfg_; }
  const Matrix& lqr_gain() const { return lqr_; }

  MpcSolution solve(const Vector& x0) const { return nominal_mpc_solve(*mpc_, x0); }
  MpcSolution solve_experiment(const Vector& x0, const Matrix& P0, const NoiseConfig& noise) const {
    return experiment_mpc_solve(*mpc_, x0, P0, noise);
  }
  /// Saturated LQR input, used when the MPC is infeasible.
  Vector fallback_input(const Vector& x0) const;

 private:
  MpcConfig cfg_;
  std::optional<CondensedMpc> mpc_;
  Matrix lqr_;
};

}  // namespace etl
