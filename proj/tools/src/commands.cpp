#include "etl_cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "etl_cli/outputs.hpp"
#include "etl_cli/scenario_io.hpp"
#include "etl_cli/studies.hpp"

#ifndef ETL_VERSION
#define ETL_VERSION "0.0.0"
#endif

namespace etl::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string scenario;
  std::string out;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw Error("cannot create output directory " + out.string());
}

void write_manifest(const fs::path& out, const std::string& command, const std::string& scenario,
                    const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& policies) {
  Json j;
  j["tool"] = "etl";
  j["version"] = ETL_VERSION;
  j["command"] = command;
  j["scenario"] = scenario;
  j["output_directory"] = out.string();
  j["seeds"] = seeds;
  j["policies"] = policies;
  write_json_file(out / "manifest.json", j);
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, long count) {
  std::vector<std::uint64_t> seeds;
  for (long i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

int do_run(const Common& c, const std::string& policy, std::optional<std::uint64_t> seed) {
  Scenario sc = load_scenario(c.scenario);
  if (!policy.empty()) sc.policy = *parse_policy(policy);
  if (seed) sc.seed = *seed;

  const fs::path out(c.out);
  prepare_out(out);
  const SimulationResult result = run_scenario(sc);
  {
    std::ofstream csv(out / "log.csv", std::ios::binary);
    write_log_csv(csv, result.log);
    if (!csv) throw Error("failed writing log.csv");
  }
  {
    std::ofstream csv(out / "params.csv", std::ios::binary);
    write_params_csv(csv, result.log);
    if (!csv) throw Error("failed writing params.csv");
  }
  write_json_file(out / "metrics.json", metrics_to_json(result.metrics));
  write_json_file(out / "events.json", events_to_json(result.log));
  write_manifest(out, "run", c.scenario, {sc.seed}, {to_string(sc.policy)});

  const MetricsReport& m = result.metrics;
  std::cout << to_string(sc.policy) << " seed " << sc.seed << ": avg error whole " << m.avg_error_whole
            << ", excluding experiments " << m.avg_error_excluding_experiments << ", triggers "
            << m.trigger_steps.size() << '\n';
  return kOk;
}

int do_compare(const Common& c, long seeds, std::uint64_t seed_base) {
  const Scenario sc = load_scenario(c.scenario);
  const fs::path out(c.out);
  prepare_out(out);
  const PolicyComparison cmp = compare_policies(sc, seed_range(seed_base, seeds), c.jobs);
  const Json table = table1_json(cmp);
  write_json_file(out / "table1.json", table);
  write_manifest(out, "compare", c.scenario, cmp.seeds, {"etl", "permanent", "never"});

  const auto& t = table["average_squared_parameter_error"];
  for (const char* metric : {"whole_run", "excluding_excitation"}) {
    std::cout << metric << ':';
    for (const char* p : {"etl", "permanent", "never"})
      std::cout << ' ' << p << ' ' << t[metric][p]["mean"].get<double>() << " +- "
                << t[metric][p]["stderr"].get<double>();
    std::cout << '\n';
  }
  std::cout << "ordering reproduced: " << (table["verdict"]["ordering_reproduced"].get<bool>() ? "yes" : "no")
            << '\n';
  return kOk;
}

int do_montecarlo(const Common& c, long runs, std::vector<double> alphas, long eval_step, std::uint64_t seed_base) {
  const Scenario sc = load_scenario(c.scenario);
  if (alphas.empty()) alphas.push_back(sc.alpha);
  const fs::path out(c.out);
  prepare_out(out);
  const FprStudy study = montecarlo_fpr(sc, runs, alphas, eval_step, c.jobs, seed_base);
  write_json_file(out / "fpr.json", fpr_json(study));
  write_manifest(out, "montecarlo", c.scenario, seed_range(seed_base, runs), {"never"});
  for (const FprEstimate& e : study.estimates)
    std::cout << "alpha " << e.alpha << ": rate " << e.rate << " [" << e.ci.lower << ", " << e.ci.upper
              << "], bound " << e.bound << (e.rate <= e.bound ? " (within)" : " (EXCEEDED)") << '\n';
  return kOk;
}

void add_common(CLI::App* cmd, Common& c, bool jobs) {
  cmd->add_option("scenario", c.scenario, "Scenario JSON file")->required();
  cmd->add_option("--out", c.out, "Output directory")->required();
  if (jobs) cmd->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Event-triggered learning: parameter filter, learning trigger and experiment MPC"};
  app.set_version_flag("--version", ETL_VERSION);
  app.require_subcommand(1);

  Common common;
  std::string policy;
  std::optional<std::uint64_t> seed;
  long seeds = 20;
  long runs = 5000;
  long eval_step = 250;
  std::uint64_t seed_base = 1;
  std::vector<double> alphas;

  auto* run = app.add_subcommand("run", "Simulate one policy and seed");
  add_common(run, common, false);
  run->add_option("--policy", policy, "etl, permanent or never (default: scenario)")
      ->check(CLI::IsMember({"etl", "permanent", "never"}));
  run->add_option("--seed", seed, "RNG seed (default: scenario)");

  auto* compare = app.add_subcommand("compare", "All policies on paired seeds, Table 1 layout");
  add_common(compare, common, true);
  compare->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  compare->add_option("--seed-base", seed_base, "First seed");

  auto* mc = app.add_subcommand("montecarlo", "Perfect-model false-positive rate of the trigger");
  add_common(mc, common, true);
  mc->add_option("--runs", runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
  mc->add_option("--alpha", alphas, "Significance level(s) (default: scenario trigger.alpha)")
      ->check(CLI::Range(0.0, 1.0));
  mc->add_option("--eval-step", eval_step, "Step at which the trigger is scored")->check(CLI::PositiveNumber);
  mc->add_option("--seed-base", seed_base, "First seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*run) return do_run(common, policy, seed);
    if (*compare) return do_compare(common, seeds, seed_base);
    return do_montecarlo(common, runs, alphas, eval_step, seed_base);
  } catch (const ScenarioFileError& e) {
    std::cerr << "config error: " << common.scenario;
    if (e.line() > 0) std::cerr << ':' << e.line();
    std::cerr << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SimulationError& e) {
    std::cerr << "runtime error at step " << e.step() << ": " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace etl::cli
