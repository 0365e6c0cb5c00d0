#include "etl/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace etl {

namespace {

double box_violation(const Vector& v, const Vector& lower, const Vector& upper) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (lower.size() && std::isfinite(lower(i))) worst = std::max(worst, lower(i) - v(i));
    if (upper.size() && std::isfinite(upper(i))) worst = std::max(worst, v(i) - upper(i));
  }
  return worst;
}

bool contains_origin_box(const Vector& lower, const Vector& upper) {
  return (lower.size() == 0 || (lower.array() <= 0.0).all()) &&
         (upper.size() == 0 || (upper.array() >= 0.0).all());
}

// Rows appended to an inequality system  A u <= b_const + B_x0 x0.
struct RowBuilder {
  std::vector<Vector> a;
  std::vector<double> c;
  std::vector<Vector> bx;

  void add(Vector row, double constant, Vector x0_coeff) {
    a.push_back(std::move(row));
    c.push_back(constant);
    bx.push_back(std::move(x0_coeff));
  }
};

}  // namespace

const char* to_string(MpcStatus status) {
  switch (status) {
    case MpcStatus::Solved:
      return "solved";
    case MpcStatus::MaxIterations:
      return "max-iterations";
    case MpcStatus::Infeasible:
      return "infeasible";
  }
  return "unknown";
}

bool StateConstraints::contains(const Vector& x, double tol) const { return violation(x) <= tol; }

double StateConstraints::violation(const Vector& x) const {
  double worst = box_violation(x, lower, upper);
  if (G.rows() > 0) worst = std::max(worst, (G * x - h).maxCoeff());
  return worst;
}

bool InputBox::contains(const Vector& u, double tol) const { return violation(u) <= tol; }

double InputBox::violation(const Vector& u) const { return box_violation(u, lower, upper); }

Vector InputBox::saturate(const Vector& u) const {
  Vector out = u;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (lower.size() && std::isfinite(lower(i))) out(i) = std::max(out(i), lower(i));
    if (upper.size() && std::isfinite(upper(i))) out(i) = std::min(out(i), upper(i));
  }
  return out;
}

void MpcConfig::validate(int n, int m) const {
  if (horizon < 1) throw Error("MpcConfig: horizon must be >= 1");
  if (Q.rows() != n || Q.cols() != n || QN.rows() != n || QN.cols() != n)
    throw DimensionError("MpcConfig: Q and QN must be n x n");
  if (R.rows() != m || R.cols() != m) throw DimensionError("MpcConfig: R must be m x m");
  if (!is_psd(Q) || !is_psd(QN)) throw Error("MpcConfig: Q and QN must be PSD");
  if (m > 0 && Eigen::LLT<Matrix>(symmetrized(R)).info() != Eigen::Success)
    throw Error("MpcConfig: R must be positive definite");
  if (!(nu >= 0.0)) throw Error("MpcConfig: nu must be nonnegative");
  if (X.G.rows() > 0 && (X.G.cols() != n || X.h.size() != X.G.rows()))
    throw DimensionError("MpcConfig: state inequality rows have wrong size");
  if ((X.lower.size() && X.lower.size() != n) || (X.upper.size() && X.upper.size() != n))
    throw DimensionError("MpcConfig: state bounds have wrong size");
  if ((U.lower.size() && U.lower.size() != m) || (U.upper.size() && U.upper.size() != m))
    throw DimensionError("MpcConfig: input bounds have wrong size");
  if ((X.h.size() && (X.h.array() < 0.0).any()) || !contains_origin_box(X.lower, X.upper) ||
      !contains_origin_box(U.lower, U.upper))
    throw Error("MpcConfig: constraint sets must contain the origin");
  if (max_iterations < 1) throw Error("MpcConfig: max_iterations must be >= 1");
  if (!(fd_step > 0.0)) throw Error("MpcConfig: fd_step must be positive");
}

std::vector<Matrix> covariance_rollout(std::span<const Vector> plan_states,
                                       std::span<const Vector> plan_inputs, const Matrix& P0,
                                       const NoiseConfig& noise, bool include_drift) {
  if (plan_states.size() != plan_inputs.size() + 1)
    throw DimensionError("covariance_rollout: need N+1 states for N inputs");
  std::vector<Matrix> out;
  out.reserve(plan_states.size());
  out.push_back(P0);
  Matrix P = P0;
  for (std::size_t k = 0; k < plan_inputs.size(); ++k) {
    const Regressor reg = regressor(plan_states[k], plan_inputs[k]);
    if (reg.C.cols() != P.rows()) throw DimensionError("covariance_rollout: P0 has wrong size");
    if (include_drift) P += noise.sigma_z;
    const Matrix PCt = P * reg.C.transpose();
    const Matrix S = reg.C * PCt + noise.sigma_w;
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success)
      throw DegenerateNoiseError("covariance_rollout: innovation covariance not invertible");
    P = symmetrized(P - PCt * llt.solve(PCt.transpose()));
    out.push_back(P);
  }
  return out;
}

CondensedMpc::CondensedMpc(const LinearModel& model, const MpcConfig& cfg)
    : model_(model), cfg_(cfg), n_(model.n()), m_(model.m()), horizon_(cfg.horizon) {
  model_.validate();
  cfg_.validate(n_, m_);
  const int N = horizon_;
  const int nu = N * m_;

  Sx_ = Matrix::Zero((N + 1) * n_, n_);
  Su_ = Matrix::Zero((N + 1) * n_, nu);
  Sx_.topRows(n_).setIdentity();
  for (int k = 1; k <= N; ++k) {
    Sx_.middleRows(k * n_, n_) = model_.A * Sx_.middleRows((k - 1) * n_, n_);
    Su_.block(k * n_, 0, n_, nu) = model_.A * Su_.block((k - 1) * n_, 0, n_, nu);
    Su_.block(k * n_, (k - 1) * m_, n_, m_) = model_.B;
  }

  Matrix Qbar = Matrix::Zero((N + 1) * n_, (N + 1) * n_);
  for (int k = 0; k < N; ++k) Qbar.block(k * n_, k * n_, n_, n_) = cfg_.Q;
  Qbar.block(N * n_, N * n_, n_, n_) = cfg_.QN;
  Matrix Rbar = Matrix::Zero(nu, nu);
  for (int k = 0; k < N; ++k) Rbar.block(k * m_, k * m_, m_, m_) = cfg_.R;

  H_ = symmetrized(2.0 * (Su_.transpose() * Qbar * Su_ + Rbar));
  F_ = 2.0 * Su_.transpose() * Qbar * Sx_;
  W_ = Sx_.transpose() * Qbar * Sx_;

  RowBuilder rows;
  const Vector zero_x0 = Vector::Zero(n_);
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < m_; ++i) {
      Vector e = Vector::Zero(nu);
      e(k * m_ + i) = 1.0;
      if (cfg_.U.upper.size() && std::isfinite(cfg_.U.upper(i))) rows.add(e, cfg_.U.upper(i), zero_x0);
      if (cfg_.U.lower.size() && std::isfinite(cfg_.U.lower(i))) rows.add(-e, -cfg_.U.lower(i), zero_x0);
    }
  }
  const int last_stage = cfg_.terminal == TerminalSet::StateSet ? N : N - 1;
  for (int k = 1; k <= last_stage; ++k) {
    const Matrix Su_k = Su_.middleRows(k * n_, n_);
    const Matrix Sx_k = Sx_.middleRows(k * n_, n_);
    for (Eigen::Index r = 0; r < cfg_.X.G.rows(); ++r) {
      const Vector g = cfg_.X.G.row(r).transpose();
      rows.add(Su_k.transpose() * g, cfg_.X.h(r), -(Sx_k.transpose() * g));
    }
    for (int i = 0; i < n_; ++i) {
      const Vector su = Su_k.row(i).transpose();
      const Vector sx = Sx_k.row(i).transpose();
      if (cfg_.X.upper.size() && std::isfinite(cfg_.X.upper(i))) rows.add(su, cfg_.X.upper(i), -sx);
      if (cfg_.X.lower.size() && std::isfinite(cfg_.X.lower(i))) rows.add(-su, -cfg_.X.lower(i), sx);
    }
  }
  const auto nrows = static_cast<Eigen::Index>(rows.a.size());
  A_in_u_.resize(nrows, nu);
  b_in_const_.resize(nrows);
  b_in_x0_.resize(nrows, n_);
  for (Eigen::Index r = 0; r < nrows; ++r) {
    A_in_u_.row(r) = rows.a[static_cast<std::size_t>(r)].transpose();
    b_in_const_(r) = rows.c[static_cast<std::size_t>(r)];
    b_in_x0_.row(r) = rows.bx[static_cast<std::size_t>(r)].transpose();
  }
  if (cfg_.terminal == TerminalSet::Zero) {
    A_eq_u_ = Su_.middleRows(N * n_, n_);
    b_eq_x0_ = -Sx_.middleRows(N * n_, n_);
  } else {
    A_eq_u_.resize(0, nu);
    b_eq_x0_.resize(0, n_);
  }
}

QpProblem CondensedMpc::problem(const Vector& x0) const {
  if (x0.size() != n_) throw DimensionError("mpc: initial state has wrong length");
  QpProblem qp;
  qp.H = H_;
  qp.f = F_ * x0;
  qp.A_eq = A_eq_u_;
  qp.b_eq = b_eq_x0_ * x0;
  qp.A_in = A_in_u_;
  qp.b_in = b_in_const_ + b_in_x0_ * x0;
  return qp;
}

std::vector<Vector> CondensedMpc::rollout(const Vector& x0, const Vector& inputs) const {
  std::vector<Vector> states;
  states.reserve(static_cast<std::size_t>(horizon_) + 1);
  states.push_back(x0);
  for (int k = 0; k < horizon_; ++k)
    states.push_back(model_.A * states.back() + model_.B * inputs.segment(k * m_, m_));
  return states;
}

double CondensedMpc::quadratic_cost(const Vector& x0, const Vector& inputs) const {
  return 0.5 * inputs.dot(H_ * inputs) + inputs.dot(F_ * x0) + x0.dot(W_ * x0);
}

double CondensedMpc::trace_term(const Vector& x0, const Vector& inputs, const Matrix& P0,
                                const NoiseConfig& noise) const {
  const std::vector<Vector> states = rollout(x0, inputs);
  const int q = n_ + m_;
  Matrix P = P0;
  Matrix PCt(P0.rows(), n_);
  Matrix S(n_, n_);
  Vector d(q);
  double sum = 0.0;
  for (int k = 0; k < horizon_; ++k) {
    d << states[static_cast<std::size_t>(k)], inputs.segment(k * m_, m_);
    if (cfg_.rollout_includes_drift) P += noise.sigma_z;
    // C = I_n (x) d^T, so P C^T and C P C^T reduce to block products with d.
    for (int j = 0; j < n_; ++j) PCt.col(j).noalias() = P.middleCols(j * q, q) * d;
    for (int i = 0; i < n_; ++i) S.row(i).noalias() = d.transpose() * PCt.middleRows(i * q, q);
    S += noise.sigma_w;
    Eigen::LLT<Matrix> llt(symmetrized(S));
    if (llt.info() != Eigen::Success)
      throw DegenerateNoiseError("experiment mpc: innovation covariance not invertible");
    P.noalias() -= PCt * llt.solve(PCt.transpose());
    sum += P.trace();
  }
  return sum;
}

double CondensedMpc::full_cost(const Vector& x0, const Vector& inputs, const Matrix& P0,
                               const NoiseConfig& noise) const {
  double cost = quadratic_cost(x0, inputs);
  if (cfg_.nu > 0.0) cost += cfg_.nu * trace_term(x0, inputs, P0, noise);
  return cost;
}

namespace {

MpcSolution make_solution(const CondensedMpc& mpc, const Vector& x0, const Vector& U,
                          MpcStatus status) {
  MpcSolution sol;
  sol.status = status;
  sol.states = mpc.rollout(x0, U);
  const int m = mpc.model().m();
  for (int k = 0; k < mpc.config().horizon; ++k) sol.inputs.push_back(U.segment(k * m, m));
  sol.cost = mpc.quadratic_cost(x0, U);
  return sol;
}

void attach_covariance_path(MpcSolution& sol, const Matrix& P0, const NoiseConfig& noise,
                            bool include_drift) {
  const auto path = covariance_rollout(sol.states, sol.inputs, P0, noise, include_drift);
  sol.cov_trace_path.clear();
  for (const Matrix& P : path) sol.cov_trace_path.push_back(P.trace());
}

}  // namespace

MpcSolution nominal_mpc_solve(const CondensedMpc& mpc, const Vector& x0) {
  const QpProblem qp = mpc.problem(x0);
  const QpResult res = solve_qp(qp);
  if (res.status == QpStatus::Infeasible) {
    MpcSolution sol;
    sol.status = MpcStatus::Infeasible;
    sol.iterations = res.iterations;
    return sol;
  }
  MpcSolution sol = make_solution(
      mpc, x0, res.x, res.status == QpStatus::Solved ? MpcStatus::Solved : MpcStatus::MaxIterations);
  sol.iterations = res.iterations;
  return sol;
}

MpcSolution experiment_mpc_solve(const CondensedMpc& mpc, const Vector& x0, const Matrix& P0,
                                 const NoiseConfig& noise) {
  const MpcConfig& cfg = mpc.config();
  MpcSolution warm = nominal_mpc_solve(mpc, x0);
  if (warm.status == MpcStatus::Infeasible) return warm;
  if (cfg.nu == 0.0) {
    attach_covariance_path(warm, P0, noise, cfg.rollout_includes_drift);
    return warm;
  }

  const QpProblem feasible = mpc.problem(x0);
  const int dim = mpc.num_inputs();
  Vector U(dim);
  for (int k = 0; k < cfg.horizon; ++k)
    U.segment(k * mpc.m_, mpc.m_) = warm.inputs[static_cast<std::size_t>(k)];

  auto cost = [&](const Vector& v) { return mpc.full_cost(x0, v, P0, noise); };
  auto project = [&](const Vector& y, Vector& out) {
    QpProblem proj = feasible;
    proj.H = Matrix::Identity(dim, dim);
    proj.f = -y;
    const QpResult r = solve_qp(proj);
    // a far-away target loses feasibility to roundoff; such points are not accepted
    if (r.status != QpStatus::Solved || qp_max_violation(feasible, r.x) > 1e-9) return false;
    out = r.x;
    return true;
  };
  auto gradient = [&](const Vector& v) {
    Vector g = mpc.H_ * v + mpc.F_ * x0;
    Vector probe = v;
    for (int i = 0; i < dim; ++i) {
      const double h = cfg.fd_step * std::max(1.0, std::abs(v(i)));
      probe(i) = v(i) + h;
      const double up = mpc.trace_term(x0, probe, P0, noise);
      probe(i) = v(i) - h;
      const double down = mpc.trace_term(x0, probe, P0, noise);
      probe(i) = v(i);
      g(i) += cfg.nu * (up - down) / (2.0 * h);
    }
    return g;
  };

  const double warm_cost = cost(U);
  Eigen::SelfAdjointEigenSolver<Matrix> es(mpc.H_, Eigen::EigenvaluesOnly);
  const double step0 = 1.0 / std::max(es.eigenvalues().maxCoeff(), 1e-12);
  int iter = 0;
  Vector trial(dim);
  Vector candidate(dim);

  // Projected gradient descent from U; returns true when it stopped before the iteration cap.
  auto descend = [&](Vector& U, double& J, int budget) {
    double step = step0;
    for (int it = 0; it < budget; ++it, ++iter) {
      const Vector g = gradient(U);
      bool accepted = false;
      double trial_cost = J;
      for (int bt = 0; bt < 40; ++bt) {
        if (!project(U - step * g, trial)) break;
        const double c = cost(trial);
        if (c <= J + 1e-4 * g.dot(trial - U) && c < J) {
          accepted = true;
          trial_cost = c;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) return true;
      // Expand while longer steps keep improving; this escapes the flat
      // neighbourhood of the regulation optimum in few iterations.
      for (int ex = 0; ex < 30 && step < 1e6 * step0; ++ex) {
        if (!project(U - 2.0 * step * g, candidate)) break;
        const double c = cost(candidate);
        if (!(c < trial_cost)) break;
        step *= 2.0;
        trial = candidate;
        trial_cost = c;
      }
      const double move = (trial - U).norm();
      const double gain = J - trial_cost;
      U = trial;
      J = trial_cost;
      if (move <= 1e-10 * (1.0 + U.norm()) || gain <= 1e-13 * std::max(1.0, std::abs(J))) {
        ++iter;
        return true;
      }
    }
    return false;
  };

  const Vector U_warm = U;
  double J = warm_cost;
  bool converged = descend(U, J, cfg.max_iterations);

  // The information term is nonconvex and the warm start often sits near a saddle of it.
  // Excitation of opposite sign is about as informative, so descend once more from the
  // reflection of the first local solution through the warm start and keep the better one.
  Vector mirrored(dim);
  if (iter < cfg.max_iterations && (U - U_warm).norm() > 1e-8 * (1.0 + U.norm()) &&
      project(2.0 * U_warm - U, mirrored)) {
    double J_m = cost(mirrored);
    const bool conv_m = descend(mirrored, J_m, cfg.max_iterations - iter);
    if (J_m < J) {
      U = mirrored;
      J = J_m;
      converged = conv_m;
    }
  }

  MpcSolution sol;
  if (!(J <= warm_cost)) {
    sol = warm;
  } else {
    sol = make_solution(mpc, x0, U, converged ? MpcStatus::Solved : MpcStatus::MaxIterations);
  }
  sol.iterations = iter;
  sol.cost = std::min(J, warm_cost);
  attach_covariance_path(sol, P0, noise, cfg.rollout_includes_drift);
  return sol;
}

MpcSolution nominal_mpc_solve(const LinearModel& model, const Vector& x0, const MpcConfig& cfg) {
  return nominal_mpc_solve(CondensedMpc(model, cfg), x0);
}

MpcSolution experiment_mpc_solve(const LinearModel& model, const Vector& x0, const Matrix& P0,
                                 const NoiseConfig& noise, const MpcConfig& cfg) {
  return experiment_mpc_solve(CondensedMpc(model, cfg), x0, P0, noise);
}

double plan_violation(const MpcSolution& sol, const LinearModel& model, const MpcConfig& cfg) {
  double worst = 0.0;
  const std::size_t N = sol.inputs.size();
  for (std::size_t k = 0; k < N; ++k) {
    worst = std::max(worst, cfg.U.violation(sol.inputs[k]));
    const Vector pred = model.A * sol.states[k] + model.B * sol.inputs[k];
    worst = std::max(worst, (pred - sol.states[k + 1]).cwiseAbs().maxCoeff());
  }
  for (std::size_t k = 1; k < N; ++k) worst = std::max(worst, cfg.X.violation(sol.states[k]));
  if (cfg.terminal == TerminalSet::Zero)
    worst = std::max(worst, sol.states[N].cwiseAbs().maxCoeff());
  else
    worst = std::max(worst, cfg.X.violation(sol.states[N]));
  return worst;
}

std::optional<Matrix> dlqr_gain(const LinearModel& model, const Matrix& Q, const Matrix& R) {
  const Matrix& A = model.A;
  const Matrix& B = model.B;
  Matrix P = Q;
  for (int it = 0; it < 20000; ++it) {
    const Matrix BtP = B.transpose() * P;
    const Matrix gain = (R + BtP * B).ldlt().solve(BtP * A);
    const Matrix next = symmetrized(Q + A.transpose() * P * (A - B * gain));
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > 1e14) return std::nullopt;
    const double delta = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (delta <= 1e-11 * std::max(1.0, P.cwiseAbs().maxCoeff())) {
      const Matrix BtPn = B.transpose() * P;
      return Matrix((R + BtPn * B).ldlt().solve(BtPn * A));
    }
  }
  return std::nullopt;
}

MpcController::MpcController(const LinearModel& model, MpcConfig cfg) : cfg_(std::move(cfg)) {
  update(model);
}

void MpcController::update(const LinearModel& model) {
  model.validate();
  const int n = model.n();
  const Matrix Qs = symmetrized(cfg_.Q) + 1e-6 * Matrix::Identity(n, n);
  auto gain = dlqr_gain(model, Qs, cfg_.R);
  if (!gain) throw SynthesisError("controller synthesis failed: model is not stabilizable");
  CondensedMpc rebuilt(model, cfg_);
  mpc_.emplace(std::move(rebuilt));
  lqr_ = std::move(*gain);
}

Vector MpcController::fallback_input(const Vector& x0) const {
  return cfg_.U.saturate(-lqr_ * x0);
}

}  // namespace etl
