#include "etl/simulation.hpp"

#include <cmath>
#include <limits>

namespace etl {

const char* to_string(Policy policy) {
  switch (policy) {
    case Policy::Etl:
      return "etl";
    case Policy::Permanent:
      return "permanent";
    case Policy::Never:
      return "never";
  }
  return "unknown";
}

const char* to_string(Mode mode) { return mode == Mode::Control ? "control" : "experiment"; }

std::optional<Policy> parse_policy(const std::string& name) {
  if (name == "etl") return Policy::Etl;
  if (name == "permanent") return Policy::Permanent;
  if (name == "never") return Policy::Never;
  return std::nullopt;
}

const char* to_string(EventType type) {
  switch (type) {
    case EventType::PlantChange:
      return "plant_change";
    case EventType::Trigger:
      return "trigger";
    case EventType::ExperimentStart:
      return "experiment_start";
    case EventType::ExperimentStop:
      return "experiment_stop";
    case EventType::ModelUpdate:
      return "model_update";
    case EventType::MpcInfeasible:
      return "mpc_infeasible";
    case EventType::SynthesisFailure:
      return "synthesis_failure";
  }
  return "unknown";
}

void Scenario::validate() const {
  if (total_steps < 1) throw ConfigError("total_steps", "must be >= 1");
  if (!(Ts > 0.0) || !std::isfinite(Ts)) throw ConfigError("Ts", "must be positive");
  try {
    servo.validate();
  } catch (const Error& e) {
    throw ConfigError("servo", e.what());
  }
  if (!(ratio_low > 0.0 && ratio_low <= ratio_high))
    throw ConfigError("ratio_range", "need 0 < low <= high");
  auto check_ratio = [&](double r, const std::string& field) {
    if (!(r >= ratio_low && r <= ratio_high))
      throw ConfigError(field, "J_L/J_M ratio outside the declared uncertainty range");
  };
  check_ratio(nominal_ratio, "nominal_ratio");
  long prev = -1;
  for (std::size_t i = 0; i < change_schedule.size(); ++i) {
    const auto& c = change_schedule[i];
    const std::string field = "change_schedule[" + std::to_string(i) + "]";
    if (c.step <= prev) throw ConfigError("change_schedule", "steps must be strictly increasing");
    if (c.step < 0 || c.step >= total_steps)
      throw ConfigError("change_schedule", "change step must lie in [0, total_steps)");
    check_ratio(c.ratio, field + ".ratio");
    prev = c.step;
  }
  if (x0.size() != 0 && x0.size() != 4) throw ConfigError("x0", "must have 4 entries");
  if (sigma_w_diag.size() != 4) throw ConfigError("noise.sigma_w_diag", "must have 4 entries");
  if (!((sigma_w_diag.array() > 0.0).all()))
    throw ConfigError("noise.sigma_w_diag", "Sigma_w must be positive definite");
  if (!(sigma_w_inflation >= 1.0 && std::isfinite(sigma_w_inflation)))
    throw ConfigError("noise.sigma_w_inflation", "must be >= 1");
  if (sigma_z.kind == SigmaZDesign::Kind::Diagonal) {
    if (sigma_z.diagonal.size() != 20)
      throw ConfigError("noise.sigma_z.diagonal", "must have n(n+m) = 20 entries");
    if ((sigma_z.diagonal.array() < 0.0).any())
      throw ConfigError("noise.sigma_z.diagonal", "entries must be nonnegative");
  } else if (!(sigma_z.scale >= 0.0) || !(sigma_z.floor >= 0.0)) {
    throw ConfigError("noise.sigma_z", "scale and floor must be nonnegative");
  }
  if (!(p0_scale > 0.0)) throw ConfigError("filter.p0_scale", "must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("trigger.alpha", "must lie in (0, 1)");
  if (!(input_limit > 0.0)) throw ConfigError("constraints.input_limit", "must be positive");
  if (!(torsion_limit > 0.0)) throw ConfigError("constraints.torsion_limit", "must be positive");
  try {
    scenario_mpc(*this).validate(4, 1);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("mpc", e.what());
  }
  if (experiment_length < 1) throw ConfigError("experiment.length", "must be >= 1");
  if (experiment_stop.kind == ExperimentStop::Kind::TraceThreshold &&
      !(experiment_stop.trace_threshold > 0.0))
    throw ConfigError("experiment.trace_threshold", "must be positive");
}

LinearModel servo_model(const Scenario& sc, double ratio) {
  ServoParams p = sc.servo;
  p.J_L = ratio * p.J_M;
  return zoh_discretize(servo_continuous(p), sc.Ts);
}

ParamVector nominal_params(const Scenario& sc) { return to_params(servo_model(sc, sc.nominal_ratio)); }

Matrix design_sigma_z(const Scenario& sc) {
  if (sc.sigma_z.kind == SigmaZDesign::Kind::Diagonal) return sc.sigma_z.diagonal.asDiagonal();
  const Vector lo = to_params(servo_model(sc, sc.ratio_low)).values();
  const Vector hi = to_params(servo_model(sc, sc.ratio_high)).values();
  const Vector diag = sc.sigma_z.scale * (hi - lo).array().square() + sc.sigma_z.floor;
  return diag.asDiagonal();
}

NoiseConfig filter_noise(const Scenario& sc) {
  NoiseConfig noise;
  noise.sigma_w = (sc.sigma_w_inflation * sc.sigma_w_diag).asDiagonal();
  noise.sigma_z = design_sigma_z(sc);
  noise.lambda = 1.0;
  return noise;
}

MpcConfig scenario_mpc(const Scenario& sc) {
  MpcConfig cfg = sc.mpc;
  const Vector g = servo_torsion_row(sc.servo);
  cfg.X.G.resize(2, 4);
  cfg.X.G.row(0) = g.transpose();
  cfg.X.G.row(1) = -g.transpose();
  cfg.X.h = Vector::Constant(2, sc.torsion_limit);
  cfg.U.lower = Vector::Constant(1, -sc.input_limit);
  cfg.U.upper = Vector::Constant(1, sc.input_limit);
  return cfg;
}

namespace {

// Causal state of one closed-loop run.
class ClosedLoop {
 public:
  explicit ClosedLoop(const Scenario& sc)
      : sc_(sc),
        rng_(sc.seed),
        plant_noise_(Matrix(sc.sigma_w_diag.asDiagonal())),
        filter_noise_(filter_noise(sc)),
        true_model_(servo_model(sc, sc.nominal_ratio)),
        z_true_(to_params(true_model_)),
        z_model_(z_true_),
        filter_(initial_state(z_model_, sc.p0_scale)),
        trigger_(sc.alpha, z_model_),
        controller_(true_model_, scenario_mpc(sc)) {
    log_.policy = sc.policy;
    log_.seed = sc.seed;
    log_.steps.reserve(static_cast<std::size_t>(sc.total_steps));
    x_ = sc.x0.size() ? sc.x0 : Vector::Zero(4);
  }

  SimulationLog run() {
    std::size_t next_change = 0;
    const auto& schedule = sc_.change_schedule;
    for (long k = 0; k < sc_.total_steps; ++k) {
      if (next_change < schedule.size() && schedule[next_change].step == k) {
        true_model_ = servo_model(sc_, schedule[next_change].ratio);
        z_true_ = to_params(true_model_);
        log_.events.push_back({k, EventType::PlantChange, schedule[next_change].ratio});
        ++next_change;
      }
      try {
        step(k);
      } catch (const std::exception& e) {
        throw SimulationError(k, e.what());
      }
    }
    return std::move(log_);
  }

 private:
  void event(long k, EventType type, double value = 0.0) { log_.events.push_back({k, type, value}); }

  void rebind_model(long k, const ParamVector& z) {
    try {
      controller_.update(to_model(z));
      z_model_ = z;
      trigger_ = TriggerConfig(sc_.alpha, z_model_);
      event(k, EventType::ModelUpdate, filter_.P.trace());
    } catch (const SynthesisError&) {
      event(k, EventType::SynthesisFailure);
    }
  }

  void step(long k) {
    if (k > 0) filter_ = kf_step(filter_, x_, regressor(prev_x_, prev_u_), filter_noise_).first;

    const TriggerDecision decision = evaluate_trigger(filter_, trigger_);
    bool fired = false;
    switch (sc_.policy) {
      case Policy::Etl:
        if (mode_ == Mode::Control) {
          if (decision.fired) {
            fired = true;
            event(k, EventType::Trigger, decision.statistic);
            event(k, EventType::ExperimentStart, filter_.P.trace());
            mode_ = Mode::Experiment;
            experiment_start_ = k;
          }
        } else if (experiment_done(k)) {
          mode_ = Mode::Control;
          event(k, EventType::ExperimentStop, filter_.P.trace());
          rebind_model(k, filter_.z_hat);
        }
        break;
      case Policy::Permanent:
        rebind_model(k, filter_.z_hat);
        break;
      case Policy::Never:
        break;
    }
    // The step that fires still applies the nominal input.
    const bool experiment_input = mode_ == Mode::Experiment && experiment_start_ < k;

    MpcSolution sol = experiment_input ? controller_.solve_experiment(x_, filter_.P, filter_noise_)
                                       : controller_.solve(x_);
    Vector u;
    if (sol.status == MpcStatus::Infeasible) {
      event(k, EventType::MpcInfeasible);
      if (plan_index_ + 1 < plan_.size())
        u = controller_.config().U.saturate(plan_[++plan_index_]);
      else
        u = controller_.fallback_input(x_);
    } else {
      u = sol.inputs.front();
      plan_ = std::move(sol.inputs);
      plan_index_ = 0;
    }

    StepRecord rec;
    rec.k = k;
    rec.mode = experiment_input ? Mode::Experiment : Mode::Control;
    rec.x = x_;
    rec.u = u;
    rec.z_true = z_true_;
    rec.z_model = z_model_;
    rec.z_hat = filter_.z_hat;
    rec.p_diag = filter_.P.diagonal();
    rec.trace_P = filter_.P.trace();
    rec.statistic = decision.statistic;
    rec.threshold = decision.threshold;
    rec.fired = fired;
    rec.state_violation = controller_.config().X.violation(x_) > 0.0;
    rec.input_violation = controller_.config().U.violation(u) > 0.0;
    rec.mpc_status = sol.status;
    log_.steps.push_back(std::move(rec));

    prev_x_ = x_;
    prev_u_ = u;
    x_ = step_plant(true_model_, x_, u, plant_noise_, rng_);
  }

  bool experiment_done(long k) const {
    const long elapsed = k - experiment_start_ - 1;  // experiment inputs applied so far
    if (elapsed >= sc_.experiment_length) return true;
    return sc_.experiment_stop.kind == ExperimentStop::Kind::TraceThreshold && elapsed >= 1 &&
           filter_.P.trace() <= sc_.experiment_stop.trace_threshold;
  }

  const Scenario& sc_;
  std::mt19937_64 rng_;
  GaussianNoise plant_noise_;
  NoiseConfig filter_noise_;
  LinearModel true_model_;
  ParamVector z_true_;
  ParamVector z_model_;
  FilterState filter_;
  TriggerConfig trigger_;
  MpcController controller_;
  Mode mode_ = Mode::Control;
  long experiment_start_ = -1;
  Vector x_;
  Vector prev_x_;
  Vector prev_u_;
  std::vector<Vector> plan_;
  std::size_t plan_index_ = 0;
  SimulationLog log_;
};

}  // namespace

SimulationResult run_scenario(const Scenario& sc) {
  sc.validate();
  SimulationResult result;
  result.log = ClosedLoop(sc).run();
  result.metrics = compute_metrics(result.log);
  return result;
}

MetricsReport compute_metrics(const SimulationLog& log) {
  MetricsReport m;
  m.steps_total = static_cast<long>(log.steps.size());
  double whole = 0.0;
  double excluding = 0.0;
  for (const StepRecord& r : log.steps) {
    const double e = estimate_error_sq(r.z_model, r.z_true);
    whole += e;
    if (r.mode != Mode::Experiment) {
      excluding += e;
      ++m.steps_excluding_experiments;
    }
    m.state_violations += r.state_violation;
    m.input_violations += r.input_violation;
    if (r.fired) m.trigger_steps.push_back(r.k);
  }
  if (m.steps_total > 0) m.avg_error_whole = whole / static_cast<double>(m.steps_total);
  m.avg_error_excluding_experiments =
      m.steps_excluding_experiments > 0
          ? excluding / static_cast<double>(m.steps_excluding_experiments)
          : std::numeric_limits<double>::quiet_NaN();

  std::optional<ExperimentSummary> open;
  for (const Event& e : log.events) {
    switch (e.type) {
      case EventType::PlantChange:
        m.change_steps.push_back(e.step);
        break;
      case EventType::MpcInfeasible:
        ++m.mpc_infeasible;
        break;
      case EventType::ExperimentStart:
        open = ExperimentSummary{e.step, -1, e.value, 0.0};
        break;
      case EventType::ExperimentStop:
        if (open) {
          open->stop = e.step;
          open->trace_stop = e.value;
          m.experiments.push_back(*open);
          open.reset();
        }
        break;
      default:
        break;
    }
  }
  for (long c : m.change_steps) {
    std::optional<long> delay;
    for (long t : m.trigger_steps) {
      if (t >= c) {
        delay = t - c;
        break;
      }
    }
    m.detection_delays.push_back(delay);
  }
  return m;
}

}  // namespace etl
