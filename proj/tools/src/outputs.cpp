#include "etl_cli/outputs.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace etl::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> log_csv_header(int n, int m) {
  std::vector<std::string> cols{"k", "mode"};
  for (int i = 1; i <= n; ++i) cols.push_back("x" + std::to_string(i));
  for (int i = 1; i <= m; ++i) cols.push_back("u" + std::to_string(i));
  for (const char* c : {"trace_P", "statistic", "threshold", "fired", "state_violation", "input_violation",
                        "mpc_status"})
    cols.emplace_back(c);
  return cols;
}

namespace {

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

void write_log_csv(std::ostream& out, const SimulationLog& log) {
  const int n = log.steps.empty() ? 4 : static_cast<int>(log.steps.front().x.size());
  const int m = log.steps.empty() ? 1 : static_cast<int>(log.steps.front().u.size());
  write_row(out, log_csv_header(n, m));
  std::vector<std::string> cells;
  for (const StepRecord& r : log.steps) {
    cells.clear();
    cells.push_back(std::to_string(r.k));
    cells.emplace_back(to_string(r.mode));
    for (Eigen::Index i = 0; i < r.x.size(); ++i) cells.push_back(format_double(r.x(i)));
    for (Eigen::Index i = 0; i < r.u.size(); ++i) cells.push_back(format_double(r.u(i)));
    cells.push_back(format_double(r.trace_P));
    cells.push_back(format_double(r.statistic));
    cells.push_back(format_double(r.threshold));
    cells.emplace_back(r.fired ? "1" : "0");
    cells.emplace_back(r.state_violation ? "1" : "0");
    cells.emplace_back(r.input_violation ? "1" : "0");
    cells.emplace_back(to_string(r.mpc_status));
    write_row(out, cells);
  }
}

void write_params_csv(std::ostream& out, const SimulationLog& log) {
  out << "k,index,row,col,z_true,z_model,z_hat,p_diag\n";
  for (const StepRecord& r : log.steps) {
    const int n = r.z_true.n();
    const int d = n + r.z_true.m();
    for (int i = 0; i < r.z_true.size(); ++i) {
      // block i / d of z is row i / d of [A B]
      out << r.k << ',' << i << ',' << i / d + 1 << ',' << i % d + 1 << ',' << format_double(r.z_true.values()(i))
          << ',' << format_double(r.z_model.values()(i)) << ',' << format_double(r.z_hat.values()(i)) << ','
          << format_double(r.p_diag(i)) << '\n';
    }
  }
}

Json metrics_to_json(const MetricsReport& m) {
  Json j;
  j["avg_error_whole"] = nullable(m.avg_error_whole);
  j["avg_error_excluding_experiments"] = nullable(m.avg_error_excluding_experiments);
  j["steps_total"] = m.steps_total;
  j["steps_excluding_experiments"] = m.steps_excluding_experiments;
  j["state_violations"] = m.state_violations;
  j["input_violations"] = m.input_violations;
  j["mpc_infeasible"] = m.mpc_infeasible;
  j["trigger_steps"] = m.trigger_steps;
  j["change_steps"] = m.change_steps;
  Json delays = Json::array();
  for (const auto& d : m.detection_delays) delays.push_back(d ? Json(*d) : Json(nullptr));
  j["detection_delays"] = delays;
  Json exps = Json::array();
  for (const ExperimentSummary& e : m.experiments)
    exps.push_back({{"start", e.start}, {"stop", e.stop}, {"trace_start", e.trace_start}, {"trace_stop", e.trace_stop}});
  j["experiments"] = exps;
  return j;
}

Json events_to_json(const SimulationLog& log) {
  Json j;
  j["policy"] = to_string(log.policy);
  j["seed"] = log.seed;
  Json events = Json::array();
  for (const Event& e : log.events)
    events.push_back({{"step", e.step}, {"type", to_string(e.type)}, {"value", nullable(e.value)}});
  j["events"] = events;
  return j;
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace etl::cli
