#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "etl/errors.hpp"

namespace etl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Discrete-time linear model x+ = A x + B u.
struct LinearModel {
  Matrix A;
  Matrix B;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  /// Throws DimensionError / NonFiniteError when the pair is malformed.
  void validate() const;
};

/// Continuous-time pair dx/dt = A x + B u.
struct ContinuousModel {
  Matrix A;
  Matrix B;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  void validate() const;
};

/// Vectorized parameter matrix.
///
/// The parameter matrix Theta is (n+m) x n with Theta^T = [A B]; the vector
/// stacks the columns of Theta, so entry block j holds row j of [A B]. With
/// this orientation C * z = Theta^T d for C = I_n (x) d^T.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(Vector z, int n, int m);

  const Vector& values() const { return z_; }
  Vector& values() { return z_; }
  int n() const { return n_; }
  int m() const { return m_; }
  int size() const { return static_cast<int>(z_.size()); }

 private:
  Vector z_;
  int n_ = 0;
  int m_ = 0;
};

/// One-step data d = [x; u] and its Kronecker regressor C = I_n (x) d^T.
struct Regressor {
  Vector d;
  Matrix C;
};

ParamVector vectorize(const Matrix& theta, int n, int m);
Matrix unvectorize(const ParamVector& z);

/// Theta = [A B]^T for the given model, vectorized.
ParamVector to_params(const LinearModel& model);
LinearModel to_model(const ParamVector& z);

Regressor regressor(const Vector& x, const Vector& u);

/// exp(M) by scaling and squaring around a diagonal Pade(6,6) approximant.
Matrix matrix_exponential(const Matrix& M);

/// Zero-order-hold discretization through the augmented block exponential.
LinearModel zoh_discretize(const ContinuousModel& cm, double Ts);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
double chi2_cdf(double q, int dof);
double chi2_quantile(double p, int dof);

/// v^T P^{-1} v through the Cholesky factor of P.
double mahalanobis_sq(const Vector& v, const Matrix& P);

/// Sum d d^T - eps I is PSD (eigenvalue slack 1e-10).
bool pe_check(std::span<const Vector> data, double eps);

/// Numerical rank of the stacked regressors [C_0; C_1; ...] (relative threshold 1e-9).
int observability_rank(std::span<const Matrix> regressors);
int numerical_rank(const Matrix& M, double rel_tol = 1e-9);

/// Smallest eigenvalue of the symmetric part of M.
double min_eigenvalue(const Matrix& M);
bool is_psd(const Matrix& M, double slack = 1e-10);
Matrix symmetrized(const Matrix& M);

}  // namespace etl
