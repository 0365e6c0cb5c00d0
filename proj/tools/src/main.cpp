#include "etl_cli/commands.hpp"

int main(int argc, char** argv) { return etl::cli::run_cli(argc, argv); }
