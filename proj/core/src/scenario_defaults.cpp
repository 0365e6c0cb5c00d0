#include "etl/simulation.hpp"

namespace etl {

Scenario servo_study_scenario() {
  Scenario sc;
  sc.total_steps = 3000;
  sc.Ts = 0.1;
  sc.nominal_ratio = 20.0;
  sc.servo.J_L = sc.nominal_ratio * sc.servo.J_M;
  sc.change_schedule = {{1000, 22.0}, {2000, 19.0}};
  sc.x0 = Vector::Zero(4);
  sc.sigma_w_diag.resize(4);
  sc.sigma_w_diag << 0.99e-4, 0.99e-4, 0.939e-4, 0.056e-4;
  sc.sigma_z.kind = SigmaZDesign::Kind::Sensitivity;
  sc.sigma_z.scale = 1e-4;
  sc.sigma_z.floor = 1e-10;
  sc.p0_scale = 1e-2;
  sc.alpha = 0.01;

  sc.mpc.horizon = 6;
  sc.mpc.Q = Matrix::Identity(4, 4);
  sc.mpc.R = 1e-2 * Matrix::Identity(1, 1);
  sc.mpc.QN = Matrix::Identity(4, 4);
  sc.mpc.nu = 1e5;
  sc.mpc.terminal = TerminalSet::Zero;
  sc.mpc.rollout_includes_drift = true;
  sc.mpc.max_iterations = 200;
  sc.mpc.fd_step = 1e-6;

  sc.experiment_length = 200;
  sc.experiment_stop.kind = ExperimentStop::Kind::FixedDuration;
  sc.policy = Policy::Etl;
  sc.seed = 1;
  return sc;
}

}  // namespace etl
