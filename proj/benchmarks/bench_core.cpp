#include <benchmark/benchmark.h>

#include "etl/control.hpp"
#include "etl/estimators.hpp"
#include "etl/simulation.hpp"
#include "etl/trigger.hpp"

using namespace etl;

namespace {

struct ServoFixture {
  Scenario sc = servo_study_scenario();
  LinearModel model = servo_model(sc, sc.nominal_ratio);
  NoiseConfig noise = filter_noise(sc);
  MpcConfig cfg = scenario_mpc(sc);
  FilterState filter = initial_state(nominal_params(sc), sc.p0_scale);
  Vector x0 = sc.x0;
};

const ServoFixture& fixture() {
  static const ServoFixture f;
  return f;
}

void BM_KfStep(benchmark::State& state) {
  const ServoFixture& f = fixture();
  const Vector u = Vector::Constant(1, 10.0);
  const Regressor reg = regressor(f.x0, u);
  const Vector x_next = f.model.A * f.x0 + f.model.B * u;
  for (auto _ : state) benchmark::DoNotOptimize(kf_step(f.filter, x_next, reg, f.noise));
}
BENCHMARK(BM_KfStep);

void BM_TriggerEvaluate(benchmark::State& state) {
  const ServoFixture& f = fixture();
  const TriggerConfig cfg(f.sc.alpha, f.filter.z_hat);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_trigger(f.filter, cfg));
}
BENCHMARK(BM_TriggerEvaluate);

void BM_NominalMpc(benchmark::State& state) {
  const ServoFixture& f = fixture();
  const CondensedMpc mpc(f.model, f.cfg);
  for (auto _ : state) benchmark::DoNotOptimize(nominal_mpc_solve(mpc, f.x0));
}
BENCHMARK(BM_NominalMpc)->Unit(benchmark::kMicrosecond);

void BM_ExperimentMpc(benchmark::State& state) {
  const ServoFixture& f = fixture();
  const CondensedMpc mpc(f.model, f.cfg);
  for (auto _ : state) benchmark::DoNotOptimize(experiment_mpc_solve(mpc, f.x0, f.filter.P, f.noise));
}
BENCHMARK(BM_ExperimentMpc)->Unit(benchmark::kMillisecond);

void BM_Chi2Quantile(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(chi2_quantile(0.99, 20));
}
BENCHMARK(BM_Chi2Quantile);

void BM_MatrixExponential(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Matrix M = Matrix::Random(n, n);
  M *= 3.0 / M.norm();
  for (auto _ : state) benchmark::DoNotOptimize(matrix_exponential(M));
}
BENCHMARK(BM_MatrixExponential)->Arg(4)->Arg(16);

void BM_ServoRun(benchmark::State& state) {
  Scenario sc = servo_study_scenario();
  sc.policy = static_cast<Policy>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(sc).metrics.avg_error_whole);
}
BENCHMARK(BM_ServoRun)->Arg(static_cast<int>(Policy::Never))->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
