#include "etl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace etl {

namespace {

void require_finite(const Matrix& M, const char* what) {
  if (!M.allFinite()) throw NonFiniteError(std::string(what) + " has non-finite entries");
}

void check_pair(const Matrix& A, const Matrix& B, const char* what) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw DimensionError(std::string(what) + ": A must be square and non-empty");
  if (B.rows() != A.rows())
    throw DimensionError(std::string(what) + ": B must have as many rows as A");
  require_finite(A, what);
  require_finite(B, what);
}

}  // namespace

void LinearModel::validate() const { check_pair(A, B, "LinearModel"); }

void ContinuousModel::validate() const { check_pair(A, B, "ContinuousModel"); }

ParamVector::ParamVector(Vector z, int n, int m) : z_(std::move(z)), n_(n), m_(m) {
  if (n <= 0 || m < 0) throw DimensionError("ParamVector: need n > 0 and m >= 0");
  if (z_.size() != static_cast<Eigen::Index>(n) * (n + m))
    throw DimensionError("ParamVector: length " + std::to_string(z_.size()) +
                         " != n(n+m) = " + std::to_string(n * (n + m)));
}

ParamVector vectorize(const Matrix& theta, int n, int m) {
  if (theta.rows() != n + m || theta.cols() != n)
    throw DimensionError("vectorize: Theta must be (n+m) x n");
  require_finite(theta, "Theta");
  // Eigen storage is column-major, so the raw buffer is already vec(Theta).
  Vector z = Eigen::Map<const Vector>(theta.data(), theta.size());
  return ParamVector(std::move(z), n, m);
}

Matrix unvectorize(const ParamVector& z) {
  return Eigen::Map<const Matrix>(z.values().data(), z.n() + z.m(), z.n());
}

ParamVector to_params(const LinearModel& model) {
  model.validate();
  const int n = model.n();
  const int m = model.m();
  Matrix theta(n + m, n);
  theta.topRows(n) = model.A.transpose();
  if (m > 0) theta.bottomRows(m) = model.B.transpose();
  return vectorize(theta, n, m);
}

LinearModel to_model(const ParamVector& z) {
  const Matrix theta = unvectorize(z);
  LinearModel model;
  model.A = theta.topRows(z.n()).transpose();
  model.B = theta.bottomRows(z.m()).transpose();
  return model;
}

Regressor regressor(const Vector& x, const Vector& u) {
  const Eigen::Index n = x.size();
  const Eigen::Index m = u.size();
  if (n == 0) throw DimensionError("regressor: empty state");
  Regressor r;
  r.d.resize(n + m);
  r.d << x, u;
  r.C = Matrix::Zero(n, n * (n + m));
  for (Eigen::Index i = 0; i < n; ++i) r.C.block(i, i * (n + m), 1, n + m) = r.d.transpose();
  return r;
}

Matrix matrix_exponential(const Matrix& M) {
  if (M.rows() != M.cols()) throw DimensionError("matrix_exponential: matrix must be square");
  require_finite(M, "matrix_exponential argument");
  const Eigen::Index dim = M.rows();
  if (dim == 0) return M;

  // Scale so that ||X||_1 <= 1/2; the (6,6) Pade error there is below 1e-16.
  const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix X = M / std::ldexp(1.0, squarings);

  constexpr int q = 6;
  double c = 1.0;
  const Matrix I = Matrix::Identity(dim, dim);
  Matrix power = I;
  Matrix num = I;
  Matrix den = I;
  for (int k = 1; k <= q; ++k) {
    c *= static_cast<double>(q - k + 1) / static_cast<double>(k * (2 * q - k + 1));
    power = power * X;
    num += c * power;
    den += ((k % 2) ? -c : c) * power;
  }
  Matrix E = den.partialPivLu().solve(num);
  for (int s = 0; s < squarings; ++s) E = E * E;
  if (!E.allFinite()) throw NonFiniteError("matrix_exponential overflowed");
  return E;
}

LinearModel zoh_discretize(const ContinuousModel& cm, double Ts) {
  cm.validate();
  if (!(Ts > 0.0) || !std::isfinite(Ts)) throw Error("zoh_discretize: Ts must be positive");
  const int n = cm.n();
  const int m = cm.m();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = cm.A * Ts;
  aug.topRightCorner(n, m) = cm.B * Ts;
  const Matrix E = matrix_exponential(aug);
  LinearModel out{E.topLeftCorner(n, n), E.topRightCorner(n, m)};
  if (!out.A.allFinite() || !out.B.allFinite())
    throw NonFiniteError("zoh_discretize: non-finite discretization");
  return out;
}

double mahalanobis_sq(const Vector& v, const Matrix& P) {
  if (P.rows() != P.cols() || P.rows() != v.size())
    throw DimensionError("mahalanobis_sq: residual and covariance sizes differ");
  Eigen::LLT<Matrix> llt(P);
  if (llt.info() != Eigen::Success)
    throw SingularCovarianceError("mahalanobis_sq: covariance is not positive definite");
  const Vector w = llt.matrixL().solve(v);
  return w.squaredNorm();
}

double min_eigenvalue(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const Matrix& M, double slack) { return min_eigenvalue(M) >= -slack; }

Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

bool pe_check(std::span<const Vector> data, double eps) {
  if (data.empty()) throw DimensionError("pe_check: empty data sequence");
  if (!(eps > 0.0)) throw Error("pe_check: eps must be positive");
  const Eigen::Index dim = data.front().size();
  Matrix gram = Matrix::Zero(dim, dim);
  for (const Vector& d : data) {
    if (d.size() != dim) throw DimensionError("pe_check: ragged data vectors");
    gram.noalias() += d * d.transpose();
  }
  gram -= eps * Matrix::Identity(dim, dim);
  return is_psd(gram, 1e-10);
}

int numerical_rank(const Matrix& M, double rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  if (!(smax > 0.0)) return 0;
  return static_cast<int>((s.array() > rel_tol * smax).count());
}

int observability_rank(std::span<const Matrix> regressors) {
  if (regressors.empty()) throw DimensionError("observability_rank: no regressors");
  const Eigen::Index cols = regressors.front().cols();
  Eigen::Index rows = 0;
  for (const Matrix& c : regressors) {
    if (c.cols() != cols) throw DimensionError("observability_rank: inconsistent regressor shapes");
    rows += c.rows();
  }
  Matrix stacked(rows, cols);
  Eigen::Index r = 0;
  for (const Matrix& c : regressors) {
    stacked.middleRows(r, c.rows()) = c;
    r += c.rows();
  }
  return numerical_rank(stacked, 1e-9);
}

}  // namespace etl
