#pragma once

namespace etl::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kRuntimeError = 3, kUsageError = 4 };

/// Entry point of the `etl` binary: subcommands run, compare and montecarlo.
int run_cli(int argc, char** argv);

}  // namespace etl::cli
