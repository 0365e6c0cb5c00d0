#include "etl/servo.hpp"

#include <cmath>

namespace etl {

void ServoParams::validate() const {
  const double values[] = {k_theta, rho, J_L, J_M, beta_L, beta_M, K_T, R_a};
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw Error("ServoParams: all parameters must be positive");
}

ContinuousModel servo_continuous(const ServoParams& p) {
  p.validate();
  ContinuousModel cm;
  cm.A = Matrix::Zero(4, 4);
  cm.A(0, 1) = 1.0;
  cm.A(1, 0) = -p.k_theta / p.J_L;
  cm.A(1, 1) = -p.beta_L / p.J_L;
  cm.A(1, 2) = p.k_theta / (p.rho * p.J_L);
  cm.A(2, 3) = 1.0;
  cm.A(3, 0) = p.k_theta / (p.rho * p.J_M);
  cm.A(3, 2) = -p.k_theta / (p.rho * p.rho * p.J_M);
  cm.A(3, 3) = -(p.beta_M * p.R_a + p.K_T * p.K_T) / (p.J_M * p.R_a);
  cm.B = Matrix::Zero(4, 1);
  cm.B(3, 0) = p.K_T / (p.R_a * p.J_M);
  return cm;
}

Vector servo_torsion_row(const ServoParams& p) {
  Vector g(4);
  g << p.k_theta, 0.0, -p.k_theta / p.rho, 0.0;
  return g;
}

GaussianNoise::GaussianNoise(const Matrix& covariance) {
  if (covariance.rows() != covariance.cols()) throw DimensionError("GaussianNoise: covariance must be square");
  const Matrix sym = symmetrized(covariance);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
    return;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.eigenvalues().minCoeff() < -1e-12) throw Error("GaussianNoise: covariance is not PSD");
  factor_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Vector GaussianNoise::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector xi(factor_.cols());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = normal(rng);
  return factor_ * xi;
}

Vector step_plant(const LinearModel& model, const Vector& x, const Vector& u,
                  const GaussianNoise& noise, std::mt19937_64& rng) {
  if (x.size() != model.n() || u.size() != model.m() || noise.dim() != model.n())
    throw DimensionError("step_plant: dimension mismatch");
  return model.A * x + model.B * u + noise.sample(rng);
}

}  // namespace etl
