#include "etl/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace etl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Constraints in the internal form n_j^T x >= c_j (equalities hold with =).
struct Constraints {
  Matrix normals;  // one column per constraint
  Vector rhs;
  int num_eq = 0;
};

class ActiveSetSolver {
 public:
  ActiveSetSolver(const Matrix& H, const Constraints& cons) : cons_(cons), llt_(H) {}

  bool factorized() const { return llt_.info() == Eigen::Success; }

  Vector unconstrained(const Vector& f) const { return llt_.solve(-f); }

  // Primal step z = H* n_p and dual step r = N* n_p for the current active set.
  void directions(const std::vector<int>& active, int p, Vector& z, Vector& r) const {
    const Vector np = cons_.normals.col(p);
    const Vector hinv_np = llt_.solve(np);
    if (active.empty()) {
      z = hinv_np;
      r.resize(0);
      return;
    }
    Matrix N(np.size(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i)
      N.col(static_cast<Eigen::Index>(i)) = cons_.normals.col(active[i]);
    const Matrix hinv_N = llt_.solve(N);
    const Matrix M = N.transpose() * hinv_N;
    r = M.ldlt().solve(N.transpose() * hinv_np);
    z = hinv_np - hinv_N * r;
  }

  // H-metric norm of n_p, the scale for "z is numerically zero".
  double metric_norm_sq(int p) const {
    const Vector np = cons_.normals.col(p);
    return np.dot(llt_.solve(np));
  }

 private:
  const Constraints& cons_;
  Eigen::LLT<Matrix> llt_;
};

double slack(const Constraints& cons, const Vector& x, int j) {
  return cons.normals.col(j).dot(x) - cons.rhs(j);
}

double violation_tol(const Constraints& cons, int j) {
  return 1e-10 * (1.0 + std::abs(cons.rhs(j)) + cons.normals.col(j).lpNorm<Eigen::Infinity>());
}

}  // namespace

double qp_max_violation(const QpProblem& qp, const Vector& x) {
  double v = 0.0;
  if (qp.A_eq.rows() > 0) v = std::max(v, (qp.A_eq * x - qp.b_eq).cwiseAbs().maxCoeff());
  if (qp.A_in.rows() > 0) v = std::max(v, (qp.A_in * x - qp.b_in).maxCoeff());
  return v;
}

QpResult solve_qp(const QpProblem& qp) {
  const Eigen::Index dim = qp.H.rows();
  if (qp.H.cols() != dim || qp.f.size() != dim) throw DimensionError("solve_qp: H/f size mismatch");
  const Eigen::Index neq = qp.A_eq.rows();
  const Eigen::Index nin = qp.A_in.rows();
  if ((neq > 0 && (qp.A_eq.cols() != dim || qp.b_eq.size() != neq)) ||
      (nin > 0 && (qp.A_in.cols() != dim || qp.b_in.size() != nin)))
    throw DimensionError("solve_qp: constraint size mismatch");

  Constraints cons;
  cons.num_eq = static_cast<int>(neq);
  cons.normals.resize(dim, neq + nin);
  cons.rhs.resize(neq + nin);
  if (neq > 0) {
    cons.normals.leftCols(neq) = qp.A_eq.transpose();
    cons.rhs.head(neq) = qp.b_eq;
  }
  if (nin > 0) {
    cons.normals.rightCols(nin) = -qp.A_in.transpose();
    cons.rhs.tail(nin) = -qp.b_in;
  }

  ActiveSetSolver solver(qp.H, cons);
  if (!solver.factorized()) throw Error("solve_qp: Hessian is not positive definite");

  QpResult res;
  Vector x = solver.unconstrained(qp.f);
  std::vector<int> active;
  std::vector<double> mult;
  Vector z;
  Vector r;

  auto finish = [&](QpStatus status) {
    res.x = x;
    res.status = status;
    res.objective = 0.5 * x.dot(qp.H * x) + qp.f.dot(x);
    return res;
  };

  // Equalities enter first; their multipliers are sign-free and never dropped.
  for (int e = 0; e < cons.num_eq; ++e) {
    solver.directions(active, e, z, r);
    const double s = slack(cons, x, e);
    const double zn = z.dot(cons.normals.col(e));
    if (std::abs(zn) <= 1e-13 * solver.metric_norm_sq(e)) {
      // Row dependent on earlier equalities: consistent or infeasible.
      if (std::abs(s) > 1e-9 * (1.0 + std::abs(cons.rhs(e)))) return finish(QpStatus::Infeasible);
      continue;
    }
    const double t = -s / zn;
    x += t * z;
    for (std::size_t i = 0; i < active.size(); ++i) mult[i] -= t * r(static_cast<Eigen::Index>(i));
    active.push_back(e);
    mult.push_back(t);
    ++res.iterations;
  }

  const int total = static_cast<int>(neq + nin);
  const int max_iter = 50 * (static_cast<int>(dim) + total) + 100;
  std::vector<char> is_active(static_cast<std::size_t>(total), 0);
  for (int j : active) is_active[static_cast<std::size_t>(j)] = 1;

  while (true) {
    int p = -1;
    double worst = 0.0;
    for (int j = cons.num_eq; j < total; ++j) {
      if (is_active[static_cast<std::size_t>(j)]) continue;
      const double s = slack(cons, x, j);
      if (s < -violation_tol(cons, j) && s < worst) {
        worst = s;
        p = j;
      }
    }
    if (p < 0) return finish(QpStatus::Solved);

    double mult_p = 0.0;
    while (true) {
      if (++res.iterations > max_iter) return finish(QpStatus::MaxIterations);
      solver.directions(active, p, z, r);

      double t1 = kInf;
      int drop = -1;
      for (std::size_t i = 0; i < active.size(); ++i) {
        if (active[i] < cons.num_eq) continue;
        const double ri = r(static_cast<Eigen::Index>(i));
        if (ri > 0.0) {
          const double ratio = mult[i] / ri;
          if (ratio < t1) {
            t1 = ratio;
            drop = static_cast<int>(i);
          }
        }
      }
      const double zn = z.dot(cons.normals.col(p));
      double t2 = kInf;
      if (zn > 1e-13 * solver.metric_norm_sq(p)) t2 = -slack(cons, x, p) / zn;

      const double t = std::min(t1, t2);
      if (t == kInf) return finish(QpStatus::Infeasible);

      if (t2 < kInf) x += t * z;
      for (std::size_t i = 0; i < active.size(); ++i) mult[i] -= t * r(static_cast<Eigen::Index>(i));
      mult_p += t;

      if (t2 <= t1) {
        active.push_back(p);
        mult.push_back(mult_p);
        is_active[static_cast<std::size_t>(p)] = 1;
        break;
      }
      is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(drop)])] = 0;
      active.erase(active.begin() + drop);
      mult.erase(mult.begin() + drop);
    }
  }
}

}  // namespace etl
