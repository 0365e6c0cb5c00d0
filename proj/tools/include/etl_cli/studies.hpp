#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "etl_cli/scenario_io.hpp"
#include "etl_cli/stats.hpp"

namespace etl::cli {

inline constexpr std::array<Policy, 3> kPolicies{Policy::Etl, Policy::Permanent, Policy::Never};

struct PolicyComparison {
  std::vector<std::uint64_t> seeds;
  // [policy][seed index], policies in kPolicies order
  std::array<std::vector<MetricsReport>, 3> metrics;

  std::vector<double> whole(int policy) const;
  std::vector<double> excluding(int policy) const;
};

/// Runs every policy on every seed of `sc`, fanning out over `jobs` threads.
PolicyComparison compare_policies(const Scenario& sc, const std::vector<std::uint64_t>& seeds, unsigned jobs);

/// Table 1 layout: metric -> policy -> {mean, stderr}, plus sign tests on
/// etl < permanent and etl < never (excluding excitation) and the verdicts.
Json table1_json(const PolicyComparison& cmp);

struct FprEstimate {
  double alpha = 0.0;
  double threshold = 0.0;
  long runs = 0;
  long exceedances = 0;  // runs whose statistic at eval_step exceeds the threshold
  double rate = 0.0;
  Interval ci;           // Wilson 95 %
  double bound = 0.0;    // alpha + 3 sigma
  long runs_with_any_exceedance = 0;  // over steps 1..eval_step
};

struct FprStudy {
  long eval_step = 0;
  std::vector<FprEstimate> estimates;  // one per requested alpha, same runs
};

/// Perfect-model Monte Carlo of the trigger: the plant never changes, the model
/// equals the plant, and every run is scored at `eval_step`. Throws ConfigError
/// if the scenario schedules a change.
FprStudy montecarlo_fpr(const Scenario& sc, long runs, const std::vector<double>& alphas, long eval_step,
                        unsigned jobs, std::uint64_t first_seed = 1);

Json fpr_json(const FprStudy& study);

}  // namespace etl::cli
