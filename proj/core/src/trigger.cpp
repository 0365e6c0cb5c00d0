#include "etl/trigger.hpp"

#include <cmath>

namespace etl {

TriggerConfig::TriggerConfig(double alpha, ParamVector z_star)
    : alpha_(alpha), z_star_(std::move(z_star)) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("TriggerConfig: alpha must lie in (0, 1)");
  if (z_star_.size() == 0) throw DimensionError("TriggerConfig: empty model vector");
  threshold_ = chi2_quantile(1.0 - alpha, z_star_.size());
}

TriggerDecision evaluate_trigger(const FilterState& state, const TriggerConfig& cfg) {
  if (state.z_hat.size() != cfg.dof())
    throw DimensionError("evaluate_trigger: estimate and model lengths differ");
  TriggerDecision d;
  d.statistic = mahalanobis_sq(state.z_hat.values() - cfg.z_star().values(), state.P);
  d.threshold = cfg.threshold();
  d.fired = d.statistic > d.threshold;
  d.normalized = d.statistic / d.threshold;
  return d;
}

std::optional<double> model_truth_bound(const TriggerDecision& decision) {
  if (decision.fired) return std::nullopt;
  return std::sqrt(2.0) * decision.threshold;
}

}  // namespace etl
