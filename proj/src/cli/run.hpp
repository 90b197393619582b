#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cli/config.hpp"

namespace spa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::json report;
};

// Dispatches one mode, writes report.json and trajectory.csv into
// cfg.output and returns the exit status with the report.
RunOutcome run(const RunConfig& cfg);

// Full command line: spa <mode> --config <path> [--out <dir>] [--steps-per-unit N] [--seed K]
int main_entry(int argc, char** argv);

}  // namespace spa::cli
