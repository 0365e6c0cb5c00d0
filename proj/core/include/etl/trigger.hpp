#pragma once

#include <optional>

#include "etl/estimators.hpp"

namespace etl {

/// Level-alpha test configuration around a fixed model z_star.
/// The chi-square threshold is computed once at construction.
class TriggerConfig {
 public:
  TriggerConfig(double alpha, ParamVector z_star);

  double alpha() const { return alpha_; }
  const ParamVector& z_star() const { return z_star_; }
  int dof() const { return z_star_.size(); }
  double threshold() const { return threshold_; }

 private:
  double alpha_;
  ParamVector z_star_;
  double threshold_;
};

struct TriggerDecision {
  bool fired = false;
  double statistic = 0.0;
  double threshold = 0.0;
  double normalized = 0.0;
};

/// Squared Mahalanobis distance of the estimate from z_star, compared with
/// the 1-alpha chi-square quantile. Throws SingularCovarianceError on a
/// degenerate covariance instead of reporting "no trigger".
TriggerDecision evaluate_trigger(const FilterState& state, const TriggerConfig& cfg);

/// sqrt(2) * threshold when the test did not fire; empty otherwise.
std::optional<double> model_truth_bound(const TriggerDecision& decision);

}  // namespace etl
