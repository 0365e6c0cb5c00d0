#include <gtest/gtest.h>

#include <sstream>

#include "etl_cli/outputs.hpp"
#include "etl_cli/scenario_io.hpp"
#include "etl_cli/stats.hpp"
#include "etl_cli/studies.hpp"

using namespace etl;
using namespace etl::cli;

TEST(ScenarioIo, RoundTripIsIdentity) {
  const Scenario sc = servo_study_scenario();
  const Json a = scenario_to_json(sc);
  const Json b = scenario_to_json(scenario_from_json(Json::parse(a.dump())));
  EXPECT_EQ(a, b);
}

TEST(ScenarioIo, EmptyObjectGivesStudyDefaults) {
  EXPECT_EQ(scenario_to_json(parse_scenario_text("{}")), scenario_to_json(servo_study_scenario()));
}

TEST(ScenarioIo, FieldDiagnosticsCarryLines) {
  const std::string text = "{\n  \"total_steps\": 100,\n  \"change_schedule\": [{\"step\": 150, \"ratio\": 22}]\n}\n";
  try {
    parse_scenario_text(text);
    FAIL();
  } catch (const ScenarioFileError& e) {
    EXPECT_EQ(e.field(), "change_schedule");
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(ScenarioIo, SyntaxErrorsCarryLines) {
  try {
    parse_scenario_text("{\n  \"Ts\": 0.1,\n  \"x0\": [0, 0\n}");
    FAIL();
  } catch (const ScenarioFileError& e) {
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(ScenarioIo, RejectsUnknownKeysAndBadTypes) {
  auto field_of = [](const std::string& text) {
    try {
      parse_scenario_text(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of(R"({"mpc": {"nu": 1, "horizn": 4}})"), "mpc.horizn");
  EXPECT_EQ(field_of(R"({"Ts": "fast"})"), "Ts");
  EXPECT_EQ(field_of(R"({"mpc": {"horizon": 2.5}})"), "mpc.horizon");
  EXPECT_EQ(field_of(R"({"policy": "sometimes"})"), "policy");
  EXPECT_EQ(field_of(R"({"noise": {"sigma_w_diag": [0, 0, 0, 0]}})"), "noise.sigma_w_diag");
  EXPECT_EQ(field_of(R"({"servo": {"J_L": 10}})"), "servo.J_L");
  EXPECT_EQ(field_of(R"({"trigger": {"alpha": 1.5}})"), "trigger.alpha");
}

TEST(Outputs, FormatDoubleRoundTrips) {
  for (double v : {0.0, 1.0 / 3.0, -2.5e-17, 78.5398, 1e300}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Outputs, LogCsvShapeIsPolicyIndependent) {
  Scenario sc = servo_study_scenario();
  sc.total_steps = 30;
  sc.change_schedule.clear();
  for (Policy p : kPolicies) {
    sc.policy = p;
    std::ostringstream out;
    write_log_csv(out, run_scenario(sc).log);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header,
              "k,mode,x1,x2,x3,x4,u1,trace_P,statistic,threshold,fired,state_violation,input_violation,mpc_status");
    int rows = 0;
    for (std::string line; std::getline(in, line); ++rows)
      EXPECT_EQ(std::count(line.begin(), line.end(), ','), std::count(header.begin(), header.end(), ','));
    EXPECT_EQ(rows, 30);
    EXPECT_EQ(out.str().find('\r'), std::string::npos);
  }
}

TEST(Outputs, JsonDocumentsRoundTrip) {
  Scenario sc = servo_study_scenario();
  sc.total_steps = 1200;
  sc.change_schedule = {{200, 25.0}};
  const SimulationResult r = run_scenario(sc);
  for (const Json& doc : {metrics_to_json(r.metrics), events_to_json(r.log)}) {
    const Json again = Json::parse(doc.dump(2));
    EXPECT_EQ(again, doc);
    EXPECT_EQ(again.dump(2), doc.dump(2));
  }
}

TEST(Stats, SignTestExact) {
  EXPECT_NEAR(binomial_half_upper_tail(20, 15), 0.020694732666015625, 1e-15);
  EXPECT_NEAR(binomial_half_upper_tail(20, 14), 0.05765914916992188, 1e-15);
  EXPECT_EQ(binomial_half_upper_tail(5, 0), 1.0);
  const SignTest t = sign_test({1, 2, 3, 4}, {2, 2, 4, 3});
  EXPECT_EQ(t.wins, 2);
  EXPECT_EQ(t.losses, 1);
  EXPECT_EQ(t.ties, 1);
  EXPECT_NEAR(t.p_value, 0.5, 1e-15);
}

TEST(Stats, WilsonAndBound) {
  const Interval ci = wilson_interval(50, 1000);
  EXPECT_LT(ci.lower, 0.05);
  EXPECT_GT(ci.upper, 0.05);
  EXPECT_NEAR(ci.lower, 0.0381, 1e-3);
  EXPECT_NEAR(ci.upper, 0.0653, 1e-3);
  EXPECT_NEAR(binomial_level_bound(0.05, 5000), 0.0592, 1e-4);
  const MeanStderr ms = mean_stderr({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(ms.mean, 2.0);
  EXPECT_NEAR(ms.stderr_, 1.0 / std::sqrt(3.0), 1e-15);
}

TEST(Studies, MonteCarloRejectsChanges) {
  EXPECT_THROW(montecarlo_fpr(servo_study_scenario(), 10, {0.05}, 50, 1), ConfigError);
}

TEST(Studies, MonteCarloIsJobCountIndependent) {
  Scenario sc = servo_study_scenario();
  sc.change_schedule.clear();
  const Json a = fpr_json(montecarlo_fpr(sc, 40, {0.05, 0.5}, 60, 1));
  const Json b = fpr_json(montecarlo_fpr(sc, 40, {0.05, 0.5}, 60, 3));
  EXPECT_EQ(a, b);
  for (const auto& r : a["results"]) EXPECT_TRUE(r["within_bound"].get<bool>());
}

TEST(Studies, Table1Shape) {
  Scenario sc = servo_study_scenario();
  sc.total_steps = 150;
  sc.change_schedule = {{50, 24.0}};
  const Json t = table1_json(compare_policies(sc, {1, 2}, 2));
  const auto& table = t["average_squared_parameter_error"];
  ASSERT_EQ(table.size(), 2u);
  for (const char* metric : {"whole_run", "excluding_excitation"}) {
    ASSERT_EQ(table[metric].size(), 3u);
    for (const char* p : {"etl", "permanent", "never"}) {
      EXPECT_TRUE(table[metric][p].contains("mean"));
      EXPECT_TRUE(table[metric][p].contains("stderr"));
    }
  }
  EXPECT_EQ(t["sign_tests"].size(), 2u);
  EXPECT_EQ(t["per_seed"].size(), 2u);
}
