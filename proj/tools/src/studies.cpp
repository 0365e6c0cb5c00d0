#include "etl_cli/studies.hpp"

#include "etl_cli/outputs.hpp"
#include "etl_cli/pool.hpp"

namespace etl::cli {

std::vector<double> PolicyComparison::whole(int policy) const {
  std::vector<double> v;
  for (const MetricsReport& m : metrics[policy]) v.push_back(m.avg_error_whole);
  return v;
}

std::vector<double> PolicyComparison::excluding(int policy) const {
  std::vector<double> v;
  for (const MetricsReport& m : metrics[policy]) v.push_back(m.avg_error_excluding_experiments);
  return v;
}

PolicyComparison compare_policies(const Scenario& sc, const std::vector<std::uint64_t>& seeds, unsigned jobs) {
  sc.validate();
  PolicyComparison cmp;
  cmp.seeds = seeds;
  for (auto& per : cmp.metrics) per.resize(seeds.size());
  const std::size_t tasks = seeds.size() * kPolicies.size();
  // ETL runs are the slowest; interleaving policies keeps the workers balanced.
  parallel_for(tasks, jobs, [&](std::size_t t) {
    const std::size_t p = t % kPolicies.size();
    const std::size_t s = t / kPolicies.size();
    Scenario run = sc;
    run.policy = kPolicies[p];
    run.seed = seeds[s];
    cmp.metrics[p][s] = run_scenario(run).metrics;
  });
  return cmp;
}

Json table1_json(const PolicyComparison& cmp) {
  Json j;
  j["seeds"] = cmp.seeds;
  Json table;
  const std::pair<const char*, std::vector<double> (PolicyComparison::*)(int) const> rows[] = {
      {"whole_run", &PolicyComparison::whole}, {"excluding_excitation", &PolicyComparison::excluding}};
  for (const auto& [name, getter] : rows) {
    Json row;
    for (int p = 0; p < 3; ++p) {
      const MeanStderr ms = mean_stderr((cmp.*getter)(p));
      row[to_string(kPolicies[p])] = {{"mean", ms.mean}, {"stderr", ms.stderr_}};
    }
    table[name] = row;
  }
  j["average_squared_parameter_error"] = table;

  Json tests = Json::array();
  bool etl_best = true;
  for (int other : {1, 2}) {
    const SignTest t = sign_test(cmp.excluding(0), cmp.excluding(other));
    const bool significant = t.p_value < 0.05;
    etl_best = etl_best && significant;
    tests.push_back({{"metric", "excluding_excitation"},
                     {"hypothesis", std::string("etl < ") + to_string(kPolicies[other])},
                     {"wins", t.wins},
                     {"losses", t.losses},
                     {"ties", t.ties},
                     {"p_value", t.p_value},
                     {"significant", significant}});
  }
  j["sign_tests"] = tests;

  const double never_whole = mean_stderr(cmp.whole(2)).mean;
  const bool never_worst =
      never_whole > mean_stderr(cmp.whole(0)).mean && never_whole > mean_stderr(cmp.whole(1)).mean;
  j["verdict"] = {{"etl_best_excluding_excitation", etl_best},
                  {"never_worst_whole_run", never_worst},
                  {"ordering_reproduced", etl_best && never_worst}};

  Json per_seed = Json::array();
  for (std::size_t s = 0; s < cmp.seeds.size(); ++s) {
    Json entry{{"seed", cmp.seeds[s]}};
    for (int p = 0; p < 3; ++p) {
      const MetricsReport& m = cmp.metrics[p][s];
      entry[to_string(kPolicies[p])] = {{"whole_run", m.avg_error_whole},
                                        {"excluding_excitation", m.avg_error_excluding_experiments},
                                        {"triggers", m.trigger_steps.size()}};
    }
    per_seed.push_back(std::move(entry));
  }
  j["per_seed"] = per_seed;
  return j;
}

FprStudy montecarlo_fpr(const Scenario& sc, long runs, const std::vector<double>& alphas, long eval_step,
                        unsigned jobs, std::uint64_t first_seed) {
  if (!sc.change_schedule.empty())
    throw ConfigError("change_schedule", "the false-positive study needs a scenario without changes");
  if (runs < 1) throw ConfigError("runs", "must be >= 1");
  if (eval_step < 1) throw ConfigError("eval_step", "must be >= 1");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");

  Scenario base = sc;
  base.policy = Policy::Never;
  base.total_steps = eval_step + 1;
  base.validate();
  const int dof = nominal_params(base).size();

  std::vector<double> thresholds;
  for (double a : alphas) thresholds.push_back(chi2_quantile(1.0 - a, dof));

  // Per run: statistic at eval_step and the running maximum up to it.
  std::vector<double> at_eval(static_cast<std::size_t>(runs));
  std::vector<double> running_max(static_cast<std::size_t>(runs));
  parallel_for(static_cast<std::size_t>(runs), jobs, [&](std::size_t i) {
    Scenario run = base;
    run.seed = first_seed + i;
    const SimulationLog log = run_scenario(run).log;
    double mx = 0.0;
    for (const StepRecord& r : log.steps) mx = std::max(mx, r.statistic);
    at_eval[i] = log.steps.back().statistic;
    running_max[i] = mx;
  });

  FprStudy study;
  study.eval_step = eval_step;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    FprEstimate e;
    e.alpha = alphas[a];
    e.threshold = thresholds[a];
    e.runs = runs;
    for (long i = 0; i < runs; ++i) {
      e.exceedances += at_eval[static_cast<std::size_t>(i)] > e.threshold;
      e.runs_with_any_exceedance += running_max[static_cast<std::size_t>(i)] > e.threshold;
    }
    e.rate = static_cast<double>(e.exceedances) / static_cast<double>(runs);
    e.ci = wilson_interval(e.exceedances, runs);
    e.bound = binomial_level_bound(e.alpha, runs);
    study.estimates.push_back(e);
  }
  return study;
}

Json fpr_json(const FprStudy& study) {
  Json j;
  j["eval_step"] = study.eval_step;
  Json results = Json::array();
  for (const FprEstimate& e : study.estimates) {
    results.push_back({{"alpha", e.alpha},
                       {"threshold", e.threshold},
                       {"runs", e.runs},
                       {"exceedances", e.exceedances},
                       {"rate", e.rate},
                       {"ci95", {e.ci.lower, e.ci.upper}},
                       {"bound", e.bound},
                       {"within_bound", e.rate <= e.bound},
                       {"runs_with_any_exceedance", e.runs_with_any_exceedance},
                       {"any_exceedance_rate", static_cast<double>(e.runs_with_any_exceedance) /
                                                   static_cast<double>(e.runs)}});
  }
  j["results"] = results;
  return j;
}

}  // namespace etl::cli
