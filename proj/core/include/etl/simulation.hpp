#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "etl/control.hpp"
#include "etl/servo.hpp"
#include "etl/trigger.hpp"

namespace etl {

enum class Policy { Etl, Permanent, Never };
enum class Mode { Control, Experiment };

const char* to_string(Policy policy);
const char* to_string(Mode mode);
std::optional<Policy> parse_policy(const std::string& name);

struct ChangePoint {
  long step = 0;
  double ratio = 20.0;  // J_L / J_M after the change
};

/// How the assumed parameter drift covariance is built.
///
/// Sensitivity: diagonal scale * (z(high) - z(low))^2 + floor, with z the
/// discretized parameters at the ends of the declared J_L / J_M range, so
/// parameters that move with the load inertia get large entries and the
/// rest stay near `floor`. Diagonal: the explicit entries in `diagonal`.
struct SigmaZDesign {
  enum class Kind { Sensitivity, Diagonal };
  Kind kind = Kind::Sensitivity;
  double scale = 1e-4;
  double floor = 1e-10;
  Vector diagonal;
};

struct ExperimentStop {
  enum class Kind { FixedDuration, TraceThreshold };
  Kind kind = Kind::FixedDuration;
  double trace_threshold = 0.0;
};

struct Scenario {
  long total_steps = 3000;
  double Ts = 0.1;
  ServoParams servo;       // J_L is overwritten from nominal_ratio
  double nominal_ratio = 20.0;
  double ratio_low = 10.0;  // declared J_L / J_M uncertainty range
  double ratio_high = 30.0;
  std::vector<ChangePoint> change_schedule;
  Vector x0;

  Vector sigma_w_diag;
  double sigma_w_inflation = 1.0;  // filter assumes inflation * Sigma_w
  SigmaZDesign sigma_z;
  double p0_scale = 1e-2;
  double alpha = 0.01;

  // Weights, horizon, nu; state and input sets are filled from the limits.
  MpcConfig mpc;
  double input_limit = 220.0;
  double torsion_limit = 78.5398;

  long experiment_length = 200;
  ExperimentStop experiment_stop;

  Policy policy = Policy::Etl;
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// The load-change study: 3000 steps at Ts = 0.1 s, J_L stepping from 20 J_M
/// to 22 J_M at step 1000 and to 19 J_M at step 2000, ETL policy.
Scenario servo_study_scenario();

/// Servo discretized at J_L = ratio * J_M.
LinearModel servo_model(const Scenario& sc, double ratio);
ParamVector nominal_params(const Scenario& sc);
Matrix design_sigma_z(const Scenario& sc);
/// Noise model used by the filter (inflated Sigma_w, designed Sigma_z, lambda = 1).
NoiseConfig filter_noise(const Scenario& sc);
/// The scenario's MPC config with the servo state and input constraints attached.
MpcConfig scenario_mpc(const Scenario& sc);

struct StepRecord {
  long k = 0;
  Mode mode = Mode::Control;
  Vector x;
  Vector u;
  ParamVector z_true;
  ParamVector z_model;
  ParamVector z_hat;
  Vector p_diag;
  double trace_P = 0.0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool fired = false;
  bool state_violation = false;
  bool input_violation = false;
  MpcStatus mpc_status = MpcStatus::Solved;
};

enum class EventType {
  PlantChange,
  Trigger,
  ExperimentStart,
  ExperimentStop,
  ModelUpdate,
  MpcInfeasible,
  SynthesisFailure
};

const char* to_string(EventType type);

struct Event {
  long step = 0;
  EventType type = EventType::Trigger;
  double value = 0.0;  // ratio for PlantChange, trace(P) for experiment events, statistic for Trigger
};

struct SimulationLog {
  Policy policy = Policy::Etl;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  std::vector<Event> events;
};

struct ExperimentSummary {
  long start = 0;
  long stop = 0;
  double trace_start = 0.0;
  double trace_stop = 0.0;
};

struct MetricsReport {
  double avg_error_whole = 0.0;
  double avg_error_excluding_experiments = 0.0;
  long steps_total = 0;
  long steps_excluding_experiments = 0;
  long state_violations = 0;
  long input_violations = 0;
  long mpc_infeasible = 0;
  std::vector<long> trigger_steps;
  std::vector<long> change_steps;
  /// Steps from each change to the next fired trigger; empty when none fired.
  std::vector<std::optional<long>> detection_delays;
  std::vector<ExperimentSummary> experiments;
};

struct SimulationResult {
  SimulationLog log;
  MetricsReport metrics;
};

/// Runs the closed loop for sc.policy. MPC infeasibility falls back to the
/// remaining inputs of the last feasible plan, then to a saturated LQR input.
SimulationResult run_scenario(const Scenario& sc);

MetricsReport compute_metrics(const SimulationLog& log);

}  // namespace etl
