#include <gtest/gtest.h>

#include <random>

#include "etl/errors.hpp"
#include "etl/estimators.hpp"
#include "oracles.hpp"

using namespace etl;
namespace orc = etl::oracle;

namespace {

FilterState scalar_state(double z, double P) {
  return FilterState{ParamVector(Vector::Constant(1, z), 1, 0), Matrix::Constant(1, 1, P), 0};
}

Regressor scalar_regressor(double c) { return regressor(Vector::Constant(1, c), Vector::Zero(0)); }

// Random stable system and an exciting input sequence with its trajectory.
struct Dataset {
  LinearModel model;
  std::vector<Vector> next_states;
  std::vector<Regressor> regressors;
};

Dataset simulate(std::mt19937_64& rng, int n, int m, int steps, double noise = 0.0, double amplitude = 1.0) {
  Dataset ds;
  Matrix A = orc::random_matrix(rng, n, n);
  A *= 0.8 / std::max(1.0, A.norm());
  ds.model = {A, orc::random_matrix(rng, n, m)};
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector x = orc::random_vector(rng, n, amplitude);
  for (int k = 0; k < steps; ++k) {
    const Vector u = orc::random_vector(rng, m, amplitude);
    ds.regressors.push_back(regressor(x, u));
    x = ds.model.A * x + ds.model.B * u;
    if (noise > 0.0)
      for (int i = 0; i < n; ++i) x(i) += noise * nd(rng);
    ds.next_states.push_back(x);
  }
  return ds;
}

}  // namespace

TEST(BatchLs, ExactlyDeterminedScalar) {
  const LinearModel model{Matrix::Constant(1, 1, 0.9), Matrix::Constant(1, 1, -0.4)};
  std::vector<Regressor> regs{regressor(Vector::Constant(1, 1.0), Vector::Zero(1)),
                              regressor(Vector::Zero(1), Vector::Constant(1, 1.0))};
  std::vector<Vector> xs;
  for (const Regressor& r : regs) xs.push_back(r.C * to_params(model).values());
  const ParamVector z = batch_ls(xs, regs);
  EXPECT_LT((z.values() - to_params(model).values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BatchLs, RecoversRandomSystem) {
  std::mt19937_64 rng(1);
  const Dataset ds = simulate(rng, 2, 1, 20);
  const ParamVector z = batch_ls(ds.next_states, ds.regressors);
  EXPECT_LT((z.values() - to_params(ds.model).values()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BatchLs, ZeroDataIsNotExciting) {
  std::vector<Regressor> regs(5, regressor(Vector::Zero(2), Vector::Zero(1)));
  std::vector<Vector> xs(5, Vector::Zero(2));
  try {
    batch_ls(xs, regs);
    FAIL() << "expected NotPersistentlyExcitingError";
  } catch (const NotPersistentlyExcitingError& e) {
    EXPECT_EQ(e.rank(), 0);
    EXPECT_EQ(e.required(), 6);
  }
}

TEST(Rls, ZeroRegressorKeepsState) {
  const FilterState s = scalar_state(0.3, 2.0);
  const FilterState t = rls_step(s, Vector::Constant(1, 5.0), scalar_regressor(0.0));
  EXPECT_EQ(t.z_hat.values()(0), 0.3);
  EXPECT_EQ(t.P(0, 0), 2.0);
}

TEST(Rls, ScalarHandEvaluation) {
  const FilterState t = rls_step(scalar_state(0.0, 1.0), Vector::Constant(1, 1.0), scalar_regressor(1.0));
  EXPECT_DOUBLE_EQ(t.z_hat.values()(0), 0.5);
  EXPECT_DOUBLE_EQ(t.P(0, 0), 0.5);
  EXPECT_EQ(t.step, 1);
}

TEST(Rls, ForgettingDividesByLambda) {
  // K = P C / (lambda + C P C), P+ = (1 - K C) P / lambda
  const double lambda = 0.9;
  const FilterState t =
      rls_step(scalar_state(0.0, 1.0), Vector::Constant(1, 1.0), scalar_regressor(1.0), lambda);
  const double K = 1.0 / (lambda + 1.0);
  EXPECT_NEAR(t.z_hat.values()(0), K, 1e-15);
  EXPECT_NEAR(t.P(0, 0), (1.0 - K) / lambda, 1e-15);
  EXPECT_THROW(rls_step(scalar_state(0, 1), Vector::Ones(1), scalar_regressor(1), 0.0), Error);
  EXPECT_THROW(rls_step(scalar_state(0, 1), Vector::Ones(1), scalar_regressor(1), 1.5), Error);
}

TEST(Rls, MatchesBatchFromDiffusePrior) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    const int m = 1 + (trial / 3) % 3;
    // the diffuse prior biases RLS by about 1e-6 |z| / lambda_min(sum d d^T), so excite strongly
    const Dataset ds = simulate(rng, n, m, 30, 0.0, 30.0);
    FilterState s = initial_state(ParamVector(Vector::Zero(n * (n + m)), n, m), 1e6);
    for (std::size_t k = 0; k < ds.regressors.size(); ++k) s = rls_step(s, ds.next_states[k], ds.regressors[k]);
    const ParamVector batch = batch_ls(ds.next_states, ds.regressors);
    EXPECT_LT((s.z_hat.values() - batch.values()).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
  }
}

TEST(Rls, CovarianceNonincreasingInLoewnerOrder) {
  std::mt19937_64 rng(3);
  const Dataset ds = simulate(rng, 2, 2, 40, 0.1);
  FilterState s = initial_state(ParamVector(Vector::Zero(8), 2, 2), 10.0);
  for (std::size_t k = 0; k < ds.regressors.size(); ++k) {
    const FilterState t = rls_step(s, ds.next_states[k], ds.regressors[k]);
    EXPECT_TRUE(is_psd(s.P - t.P, 1e-10));
    s = t;
  }
}

TEST(Kf, NoInformationNoDrift) {
  NoiseConfig noise{Matrix::Identity(2, 2), Matrix::Zero(6, 6), 1.0};
  std::mt19937_64 rng(4);
  FilterState s{ParamVector(orc::random_vector(rng, 6), 2, 1), orc::random_spd(rng, 6), 0};
  const auto [t, trace] = kf_step(s, orc::random_vector(rng, 2), regressor(Vector::Zero(2), Vector::Zero(1)), noise);
  EXPECT_EQ(t.z_hat.values(), s.z_hat.values());
  EXPECT_LT((t.P - s.P).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Kf, ScalarHandEvaluation) {
  NoiseConfig noise{Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1), 1.0};
  const auto [t, trace] = kf_step(scalar_state(0.0, 1.0), Vector::Constant(1, 1.0), scalar_regressor(1.0), noise);
  EXPECT_DOUBLE_EQ(trace.S(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(trace.K(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(trace.innovation(0), 1.0);
  EXPECT_DOUBLE_EQ(t.z_hat.values()(0), 0.5);
  EXPECT_DOUBLE_EQ(t.P(0, 0), 0.5);
}

TEST(Kf, DriftWithoutDataGrowsTrace) {
  NoiseConfig noise{Matrix::Identity(2, 2), 1e-3 * Matrix::Identity(6, 6), 1.0};
  FilterState s = initial_state(ParamVector(Vector::Zero(6), 2, 1), 0.1);
  const Regressor none = regressor(Vector::Zero(2), Vector::Zero(1));
  for (int k = 0; k < 20; ++k) {
    const double before = s.P.trace();
    s = kf_step(s, Vector::Zero(2), none, noise).first;
    EXPECT_NEAR(s.P.trace() - before, noise.sigma_z.trace(), 1e-12);
  }
}

TEST(Kf, MatchesRlsWithoutDrift) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    const int m = 1 + (trial / 3) % 3;
    const int dof = n * (n + m);
    const double sigma2 = 0.25 + 0.5 * (trial % 4);
    const Dataset ds = simulate(rng, n, m, 50, 0.2);
    NoiseConfig noise{sigma2 * Matrix::Identity(n, n), Matrix::Zero(dof, dof), 1.0};
    const ParamVector z0(orc::random_vector(rng, dof), n, m);
    const Matrix P0 = orc::random_spd(rng, dof);
    FilterState kf{z0, sigma2 * P0, 0};
    FilterState rls{z0, P0, 0};
    for (std::size_t k = 0; k < ds.regressors.size(); ++k) {
      kf = kf_step(kf, ds.next_states[k], ds.regressors[k], noise).first;
      rls = rls_step(rls, ds.next_states[k], ds.regressors[k]);
      ASSERT_LT((kf.z_hat.values() - rls.z_hat.values()).cwiseAbs().maxCoeff(), 1e-9)
          << "trial " << trial << " step " << k;
    }
  }
}

TEST(Kf, PreservesSymmetryAndPsd) {
  std::mt19937_64 rng(6);
  const Dataset ds = simulate(rng, 3, 2, 200, 0.1);
  NoiseConfig noise{0.01 * Matrix::Identity(3, 3), 1e-5 * Matrix::Identity(15, 15), 1.0};
  FilterState s = initial_state(ParamVector(Vector::Zero(15), 3, 2), 1.0);
  for (std::size_t k = 0; k < ds.regressors.size(); ++k) {
    s = kf_step(s, ds.next_states[k], ds.regressors[k], noise).first;
    EXPECT_LT((s.P - s.P.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE(is_psd(s.P));
  }
}

TEST(Kf, DegenerateNoiseIsReported) {
  NoiseConfig noise{Matrix::Zero(1, 1), Matrix::Zero(1, 1), 1.0};
  EXPECT_THROW(kf_step(scalar_state(0, 0), Vector::Ones(1), scalar_regressor(1), noise), Error);
}

// Data drawn exactly from the filter's model: z_0 ~ N(z0_hat, P0), random-walk
// parameters, Gaussian disturbances. The 95 % ellipsoid should then cover the
// true parameters in about 95 % of runs.
TEST(KfMonteCarlo, ChiSquareCoverage) {
  const int n = 2, m = 1, dof = 6, runs = 2000, steps = 40;
  const Matrix Sw = 0.05 * Matrix::Identity(n, n);
  const Matrix Sz = 1e-4 * Matrix::Identity(dof, dof);
  const Matrix P0 = 0.01 * Matrix::Identity(dof, dof);
  NoiseConfig noise{Sw, Sz, 1.0};
  const Vector z0_hat = (Vector(dof) << 0.5, 0.1, 1.0, -0.2, 0.6, 0.5).finished();
  const double q95 = orc::chi2_quantile(0.95, dof);

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto gauss = [&](const Matrix& cov) {
    Vector xi(cov.rows());
    for (int i = 0; i < xi.size(); ++i) xi(i) = nd(rng);
    return Vector(cov.llt().matrixL() * xi);
  };
  int covered = 0;
  for (int r = 0; r < runs; ++r) {
    Vector z = z0_hat + gauss(P0);
    FilterState s{ParamVector(z0_hat, n, m), P0, 0};
    Vector x = Vector::Zero(n);
    for (int k = 0; k < steps; ++k) {
      const Vector u = Vector::Constant(1, nd(rng));
      const Regressor reg = regressor(x, u);
      z += gauss(Sz);
      const Vector x_next = reg.C * z + gauss(Sw);
      s = kf_step(s, x_next, reg, noise).first;
      x = x_next;
    }
    if (mahalanobis_sq(s.z_hat.values() - z, s.P) <= q95) ++covered;
  }
  const double rate = static_cast<double>(covered) / runs;
  EXPECT_GE(rate, 0.93);
  EXPECT_LE(rate, 0.97);
}

TEST(ErrorMetric, Examples) {
  const ParamVector a(Vector::Zero(4), 1, 3);
  EXPECT_EQ(estimate_error_sq(a, a), 0.0);
  EXPECT_DOUBLE_EQ(estimate_error_sq(ParamVector(Vector::Ones(4), 1, 3), a), 1.0);
  EXPECT_DOUBLE_EQ(estimate_error_sq(ParamVector((Vector(4) << 3, 0, 0, 0).finished(), 1, 3), a), 9.0 / 4.0);
  EXPECT_THROW(estimate_error_sq(a, ParamVector(Vector::Zero(2), 1, 1)), DimensionError);
}

TEST(FilterStateValidation, RejectsAsymmetricCovariance) {
  FilterState s = initial_state(ParamVector(Vector::Zero(2), 1, 1), 1.0);
  s.P(0, 1) = 0.5;
  EXPECT_THROW(s.validate(), Error);
}
