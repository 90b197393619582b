#include "cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace spa::cli {

using nlohmann::json;

namespace {

const std::vector<std::pair<std::string, Mode>>& mode_table() {
  static const std::vector<std::pair<std::string, Mode>> table = {
      {"solve", Mode::Solve},
      {"gradient", Mode::Gradient},
      {"optimize", Mode::Optimize},
      {"perturb-terminal", Mode::PerturbTerminal},
      {"perturb-switch", Mode::PerturbSwitch},
      {"remainder", Mode::Remainder},
      {"certificate", Mode::Certificate},
  };
  return table;
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
  return v.get<int>();
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, where));
  return out;
}

}  // namespace

Mode parse_mode(const std::string& text) {
  for (const auto& [name, mode] : mode_table()) {
    if (name == text) return mode;
  }
  throw ConfigError("unknown mode '" + text + "'");
}

std::string to_string(Mode mode) {
  for (const auto& [name, m] : mode_table()) {
    if (m == mode) return name;
  }
  return "unknown";
}

RunConfig parse_config(const json& doc, Mode mode) {
  check_keys(doc, "config", {"mode", "problem", "schedule", "theta0", "integrator", "shooting",
                             "optimizer", "study", "certificate", "seed", "output"});
  RunConfig cfg;
  cfg.mode = mode;
  if (doc.contains("mode")) {
    if (!doc["mode"].is_string() || parse_mode(doc["mode"].get<std::string>()) != mode) {
      throw ConfigError("config mode does not match the command-line mode");
    }
  }

  if (!doc.contains("problem")) throw ConfigError("missing required key 'problem'");
  const json& prob = doc["problem"];
  check_keys(prob, "problem", {"name", "params"});
  if (!prob.contains("name") || !prob["name"].is_string()) {
    throw ConfigError("problem.name must be a string");
  }
  cfg.problem = prob["name"].get<std::string>();
  if (prob.contains("params")) {
    if (!prob["params"].is_object()) throw ConfigError("problem.params must be an object");
    for (const auto& [key, value] : prob["params"].items()) {
      cfg.params[key] = number(value, "problem.params." + key);
    }
  }

  if (doc.contains("schedule")) cfg.schedule = numbers(doc["schedule"], "schedule");
  if (doc.contains("theta0")) cfg.theta0 = numbers(doc["theta0"], "theta0");

  if (doc.contains("integrator")) {
    const json& integ = doc["integrator"];
    check_keys(integ, "integrator", {"steps_per_unit"});
    if (integ.contains("steps_per_unit")) {
      cfg.steps_per_unit = number(integ["steps_per_unit"], "integrator.steps_per_unit");
    }
  }
  if (doc.contains("shooting")) {
    const json& sh = doc["shooting"];
    check_keys(sh, "shooting", {"tol_res", "max_iter"});
    if (sh.contains("tol_res")) cfg.tol_res = number(sh["tol_res"], "shooting.tol_res");
    if (sh.contains("max_iter")) cfg.max_iter = integer(sh["max_iter"], "shooting.max_iter");
  }
  if (doc.contains("optimizer")) {
    const json& op = doc["optimizer"];
    check_keys(op, "optimizer", {"method", "max_iters", "grad_tol", "armijo_c",
                                 "backtrack_factor", "lbfgs_memory", "eps_sep"});
    auto& o = cfg.optimizer;
    if (op.contains("method")) {
      const std::string m = op["method"].is_string() ? op["method"].get<std::string>() : "";
      if (m == "lbfgs") {
        o.method = OptimizeMethod::Lbfgs;
      } else if (m == "gradient-descent") {
        o.method = OptimizeMethod::GradientDescent;
      } else {
        throw ConfigError("optimizer.method must be 'lbfgs' or 'gradient-descent'");
      }
    }
    if (op.contains("max_iters")) o.max_iters = integer(op["max_iters"], "optimizer.max_iters");
    if (op.contains("grad_tol")) o.grad_tol = number(op["grad_tol"], "optimizer.grad_tol");
    if (op.contains("armijo_c")) o.armijo_c = number(op["armijo_c"], "optimizer.armijo_c");
    if (op.contains("backtrack_factor")) {
      o.backtrack_factor = number(op["backtrack_factor"], "optimizer.backtrack_factor");
    }
    if (op.contains("lbfgs_memory")) {
      o.lbfgs_memory = integer(op["lbfgs_memory"], "optimizer.lbfgs_memory");
    }
    if (op.contains("eps_sep")) o.eps_sep = number(op["eps_sep"], "optimizer.eps_sep");
    try {
      o.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("optimizer: ") + e.what());
    }
  }
  if (doc.contains("study")) {
    const json& st = doc["study"];
    check_keys(st, "study", {"magnitudes", "deltas", "index", "directions"});
    if (st.contains("magnitudes")) cfg.magnitudes = numbers(st["magnitudes"], "study.magnitudes");
    if (st.contains("deltas")) cfg.deltas = numbers(st["deltas"], "study.deltas");
    if (st.contains("index")) cfg.index = integer(st["index"], "study.index");
    if (st.contains("directions")) {
      if (!st["directions"].is_array()) throw ConfigError("study.directions must be an array");
      for (const auto& d : st["directions"]) {
        cfg.directions.push_back(numbers(d, "study.directions"));
      }
    }
  }
  if (doc.contains("certificate")) {
    const json& ce = doc["certificate"];
    check_keys(ce, "certificate", {"radius", "samples", "offset"});
    if (ce.contains("radius")) cfg.radius = number(ce["radius"], "certificate.radius");
    if (ce.contains("samples")) cfg.samples = integer(ce["samples"], "certificate.samples");
    if (ce.contains("offset")) cfg.offset = numbers(ce["offset"], "certificate.offset");
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) throw ConfigError("output must be a string");
    cfg.output = doc["output"].get<std::string>();
  }

  if (!(cfg.steps_per_unit >= 1.0)) throw ConfigError("integrator.steps_per_unit must be >= 1");
  if (!(cfg.tol_res > 0.0)) throw ConfigError("shooting.tol_res must be positive");
  if (cfg.max_iter < 0) throw ConfigError("shooting.max_iter must be non-negative");

  switch (mode) {
    case Mode::PerturbTerminal:
      if (cfg.magnitudes.empty()) throw ConfigError("perturb-terminal needs study.magnitudes");
      break;
    case Mode::PerturbSwitch:
    case Mode::Remainder:
      if (!doc.contains("study") || !doc["study"].contains("deltas")) {
        throw ConfigError(to_string(mode) + " needs study.deltas");
      }
      break;
    case Mode::Certificate:
      if (!(cfg.radius > 0.0)) throw ConfigError("certificate needs a positive certificate.radius");
      if (cfg.samples < 0) throw ConfigError("certificate.samples must be non-negative");
      break;
    default:
      break;
  }
  return cfg;
}

RunConfig load_config(const std::string& path, Mode mode) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc, mode);
}

}  // namespace spa::cli
