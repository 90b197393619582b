#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spa/bench.hpp"
#include "spa/optimizer.hpp"

namespace spa::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { Solve, Gradient, Optimize, PerturbTerminal, PerturbSwitch, Remainder, Certificate };

Mode parse_mode(const std::string& text);
std::string to_string(Mode mode);

struct RunConfig {
  Mode mode = Mode::Solve;
  std::string problem;
  BenchmarkParams params;
  std::optional<std::vector<double>> schedule;
  std::optional<std::vector<double>> theta0;
  double steps_per_unit = 200.0;
  double tol_res = 1e-10;
  int max_iter = 50;
  OptimizeOptions optimizer;
  std::vector<double> magnitudes;
  std::vector<double> deltas;
  int index = 1;
  std::vector<std::vector<double>> directions;
  double radius = 0.0;
  int samples = 16;
  std::optional<std::vector<double>> offset;
  std::uint64_t seed = 1;
  std::string output = ".";
};

// Parses one JSON config document. Unknown keys and mode-specific omissions
// raise ConfigError. If the document names a mode it must agree with `mode`.
RunConfig parse_config(const nlohmann::json& doc, Mode mode);
RunConfig load_config(const std::string& path, Mode mode);

}  // namespace spa::cli
