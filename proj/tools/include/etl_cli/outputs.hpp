#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "etl_cli/scenario_io.hpp"

namespace etl::cli {

/// Shortest decimal text that reads back to the same double ("." separator).
std::string format_double(double v);

/// Column names of log.csv for a run with n states and m inputs.
std::vector<std::string> log_csv_header(int n, int m);

/// One row per step: k, mode, x1..xn, u1..um, trace_P, statistic, threshold,
/// fired, state_violation, input_violation, mpc_status. LF line endings.
void write_log_csv(std::ostream& out, const SimulationLog& log);

/// Tidy long format for parameter plots: k, index, row, col, z_true, z_model,
/// z_hat, p_diag. `index` is the position in z; (row, col) its place in [A B].
void write_params_csv(std::ostream& out, const SimulationLog& log);

Json metrics_to_json(const MetricsReport& m);
Json events_to_json(const SimulationLog& log);

/// Writes `doc` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& doc);

}  // namespace etl::cli
