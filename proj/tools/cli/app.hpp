#pragma once

#include <iosfwd>
#include <vector>

#include "run_config.hpp"
#include "swarmloc/evaluation.hpp"

namespace swarmloc::cli {

/// Runs the configured scenario in memory.
SweepResult execute(const RunConfig& config);

/// results.csv, plots/<metric>.svg and manifest.json under config.out.
/// results.csv is renamed into place last. Throws Error(kIo).
void write_outputs(const RunConfig& config, const SweepResult& result);

nlohmann::json manifest(const RunConfig& config, const SweepResult& result);

/// Full command line entry point. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace swarmloc::cli
