#pragma once

#include "etl/linalg.hpp"

namespace etl {

/// min 1/2 x^T H x + f^T x  s.t.  A_eq x = b_eq,  A_in x <= b_in, with H positive definite.
struct QpProblem {
  Matrix H;
  Vector f;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_in;
  Vector b_in;
};

enum class QpStatus { Solved, Infeasible, MaxIterations };

struct QpResult {
  Vector x;
  QpStatus status = QpStatus::Infeasible;
  double objective = 0.0;
  int iterations = 0;
};

/// Dense Goldfarb-Idnani dual active-set method. Starts from the
/// unconstrained minimizer, so no feasible initial point is needed and an
/// empty feasible set is reported as Infeasible.
QpResult solve_qp(const QpProblem& qp);

/// Largest violation of the equality and inequality rows at x.
double qp_max_violation(const QpProblem& qp, const Vector& x);

}  // namespace etl
