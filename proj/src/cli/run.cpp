#include "cli/run.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cli/report.hpp"
#include "spa/bench.hpp"
#include "spa/gradient.hpp"
#include "spa/optimizer.hpp"
#include "spa/shooting.hpp"
#include "spa/verify.hpp"

namespace spa::cli {

using nlohmann::json;

namespace {

using Vec = Vector<double>;

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = v[i];
  return out;
}

template <typename Derived>
json to_json(const Eigen::MatrixBase<Derived>& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(static_cast<double>(v(i)));
  return arr;
}

json to_json(const std::vector<double>& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json shooting_json(const ShootingResult<double>& sol) {
  return {
      {"theta", to_json(sol.theta)},
      {"residual", to_json(sol.residual)},
      {"residual_norm", sol.residual_norm},
      {"iterations", sol.iterations},
      {"gamma", sol.gamma},
      {"condition", sol.condition},
      {"converged", sol.converged},
  };
}

json costate_json(const CostateTrajectory<double>& ct, bool ok) {
  return {
      {"p0", to_json(ct.p0)},
      {"pT", to_json(ct.terminal())},
      {"terminal_gradient", to_json(ct.terminal_gradient)},
      {"condition", ct.condition},
      {"boundary_ok", ok},
  };
}

json gradient_json(const GradientReport<double>& rep) {
  json hs = json::array();
  for (const auto& h : rep.hamiltonians) hs.push_back({{"left", h.left}, {"right", h.right}});
  json out = {
      {"objective", rep.objective},
      {"gradient", to_json(rep.grad)},
      {"hamiltonians", hs},
  };
  if (rep.costate) out["costate"] = costate_json(*rep.costate, rep.costate_ok);
  return out;
}

json perturbation_json(const PerturbationStudy& st) {
  json cases = json::array();
  for (const auto& c : st.cases) {
    json jc = {{"magnitude", c.magnitude}, {"direction", c.direction}, {"ok", c.ok}};
    if (c.ok) {
      jc["response"] = c.response;
      jc["ratio"] = c.ratio;
    } else {
      jc["failure"] = c.failure;
    }
    cases.push_back(jc);
  }
  return {
      {"magnitudes", to_json(st.magnitudes)},
      {"ratios", to_json(st.ratios)},
      {"reference", optional_number(st.reference)},
      {"slope", optional_number(st.slope)},
      {"base_theta", to_json(st.base_theta)},
      {"cases", cases},
  };
}

json remainder_json(const RemainderStudy& st) {
  json cases = json::array();
  for (const auto& c : st.cases) {
    json jc = {{"delta", c.delta}, {"ok", c.ok}};
    if (c.ok) {
      jc["objective"] = c.objective;
      jc["remainder"] = c.remainder;
    } else {
      jc["failure"] = c.failure;
    }
    cases.push_back(jc);
  }
  return {
      {"deltas", to_json(st.deltas)},
      {"remainders", to_json(st.remainders)},
      {"base_objective", st.base_objective},
      {"gradient", st.gradient},
      {"noise_floor", st.noise_floor},
      {"fitted_points", st.fitted_points},
      {"slope", optional_number(st.slope)},
      {"cases", cases},
  };
}

void write_outputs(const RunConfig& cfg, const json& report, const Trajectory<double>* traj,
                   const CostateTrajectory<double>* costate) {
  const std::filesystem::path dir(cfg.output);
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json", std::ios::binary);
    out << dump_json(report);
  }
  if (traj) {
    std::ofstream out(dir / "trajectory.csv", std::ios::binary);
    write_trajectory_csv(out, *traj, costate);
  }
}

}  // namespace

RunOutcome run(const RunConfig& cfg) {
  RunOutcome outcome;
  json& report = outcome.report;
  report["mode"] = to_string(cfg.mode);

  BenchmarkSpec<double> spec;
  try {
    spec = get_benchmark<double>(cfg.problem, cfg.params);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const ProblemDef<double>& problem = spec.problem;

  Vec schedule = cfg.schedule ? to_vec(*cfg.schedule) : spec.default_schedule;
  try {
    validate_schedule(problem, schedule);
  } catch (const Error& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  const Index unknowns = static_cast<Index>(problem.partition.J.size());
  Vec theta0 = cfg.theta0 ? to_vec(*cfg.theta0) : Vec::Zero(unknowns);
  if (theta0.size() != unknowns) throw ConfigError("theta0 must have |J| entries");

  json params = json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  report["problem"] = {{"name", spec.name},
                       {"params", params},
                       {"n", problem.n()},
                       {"I", to_one_based(problem.partition.I)},
                       {"E", to_one_based(problem.partition.E)}};
  report["schedule"] = to_json(schedule);
  report["steps_per_unit"] = cfg.steps_per_unit;
  report["seed"] = cfg.seed;

  ValidationOptions vopts;
  vopts.seed = cfg.seed;
  const ValidationReport validation = validate_problem(problem, vopts);
  json findings = json::array();
  for (const auto& f : validation.findings) {
    findings.push_back({{"check", f.check}, {"message", f.message}});
  }
  report["validation"] = {{"findings", findings}, {"notes", validation.notes}};

  ShootingOptions shooting;
  shooting.tol_res = cfg.tol_res;
  shooting.max_iter = cfg.max_iter;
  shooting.mesh.steps_per_unit = cfg.steps_per_unit;
  EvaluateOptions eval_opts;
  eval_opts.shooting = shooting;
  StudyOptions study_opts;
  study_opts.shooting = shooting;
  study_opts.shooting.tol_res = std::min(cfg.tol_res, 1e-13);

  std::optional<Trajectory<double>> traj;
  std::optional<CostateTrajectory<double>> costate;
  bool failed = false;
  std::string failure;

  try {
    switch (cfg.mode) {
      case Mode::Solve: {
        auto sol = solve_boundary(problem, schedule, theta0, shooting);
        report["shooting"] = shooting_json(sol);
        if (!sol.converged) {
          failed = true;
          failure = "boundary solve did not converge";
        }
        traj = std::move(sol.trajectory);
        break;
      }
      case Mode::Gradient: {
        auto rep = evaluate(problem, schedule, theta0, eval_opts);
        report["shooting"] = shooting_json(rep.shooting);
        if (!rep.ok) {
          failed = true;
          failure = "boundary solve did not converge; gradient withheld";
        } else {
          report["gradient"] = gradient_json(rep);
          costate = rep.costate;
        }
        traj = std::move(rep.shooting.trajectory);
        break;
      }
      case Mode::Optimize: {
        OptimizeOptions oopts = cfg.optimizer;
        oopts.evaluate = eval_opts;
        const auto res = optimize(problem, schedule, oopts, theta0);
        json history = json::array();
        for (const auto& h : res.history) {
          history.push_back(
              {{"s", to_json(h.s)}, {"objective", h.objective}, {"grad_norm", h.grad_norm}});
        }
        report["optimize"] = {
            {"method", to_string(oopts.method)},
            {"s_star", to_json(res.s_star)},
            {"objective", res.objective},
            {"grad_norm", res.grad_norm},
            {"gradient", to_json(res.gradient)},
            {"iterations", res.iterations},
            {"termination", to_string(res.termination)},
            {"history", history},
        };
        if (!res.message.empty()) report["optimize"]["message"] = res.message;
        if (res.termination == Termination::EvaluationFailure) {
          failed = true;
          failure = res.message;
          break;
        }
        auto rep = evaluate(problem, res.s_star, res.theta, eval_opts);
        report["shooting"] = shooting_json(rep.shooting);
        if (rep.ok) {
          report["gradient"] = gradient_json(rep);
          costate = rep.costate;
        }
        traj = std::move(rep.shooting.trajectory);
        break;
      }
      case Mode::PerturbTerminal: {
        std::vector<Vec> dirs;
        for (const auto& d : cfg.directions) dirs.push_back(to_vec(d));
        const auto st =
            terminal_perturbation_study(problem, schedule, theta0, dirs, cfg.magnitudes, study_opts);
        report["study"] = perturbation_json(st);
        auto sol = solve_boundary(problem, schedule, theta0, shooting);
        report["shooting"] = shooting_json(sol);
        traj = std::move(sol.trajectory);
        break;
      }
      case Mode::PerturbSwitch: {
        const auto st =
            switch_perturbation_study(problem, schedule, theta0, cfg.index, cfg.deltas, study_opts);
        report["study"] = perturbation_json(st);
        auto sol = solve_boundary(problem, schedule, theta0, shooting);
        report["shooting"] = shooting_json(sol);
        traj = std::move(sol.trajectory);
        break;
      }
      case Mode::Remainder: {
        const auto st = remainder_study(problem, schedule, theta0, cfg.index, cfg.deltas, study_opts);
        report["study"] = remainder_json(st);
        auto rep = evaluate(problem, schedule, theta0, eval_opts);
        report["shooting"] = shooting_json(rep.shooting);
        if (rep.ok) {
          report["gradient"] = gradient_json(rep);
          costate = rep.costate;
        }
        traj = std::move(rep.shooting.trajectory);
        break;
      }
      case Mode::Certificate: {
        auto sol = solve_boundary(problem, schedule, theta0, shooting);
        report["shooting"] = shooting_json(sol);
        if (!sol.converged) {
          failed = true;
          failure = "boundary solve did not converge";
          traj = std::move(sol.trajectory);
          break;
        }
        const Vec offset = cfg.offset ? to_vec(*cfg.offset) : Vec::Zero(unknowns);
        if (offset.size() != unknowns) throw ConfigError("certificate.offset must have |J| entries");
        CertificateOptions copts;
        copts.sample_count = cfg.samples;
        copts.seed = cfg.seed;
        copts.shooting = shooting;
        const auto cert = newton_certificate(problem, schedule, sol.theta, offset, cfg.radius, copts);
        json jc = {
            {"gamma", cert.gamma},
            {"epsilon", cert.epsilon},
            {"delta", cert.delta},
            {"r", cert.r},
            {"bound", cert.bound ? json(*cert.bound) : json(nullptr)},
            {"hypotheses_hold", cert.hypotheses_hold},
            {"theta_start", to_json(cert.theta_start)},
            {"samples", cert.samples_used},
            {"epsilon_is_sampled_estimate", true},
        };
        const auto from_start = solve_boundary(problem, schedule, cert.theta_start, shooting);
        const double distance = inf_norm(Vec(from_start.theta - cert.theta_start));
        jc["newton_from_start"] = {
            {"theta", to_json(from_start.theta)},
            {"converged", from_start.converged},
            {"distance", distance},
            {"within_bound",
             cert.bound ? json(distance <= *cert.bound * (1 + 1e-6)) : json(nullptr)},
        };
        report["certificate"] = jc;
        traj = std::move(sol.trajectory);
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    failed = true;
    failure = e.what();
  }

  report["status"] = failed ? "solver_failure" : "ok";
  if (failed) report["error"] = failure;
  outcome.exit_code = failed ? kExitSolver : kExitOk;
  write_outputs(cfg, report, traj ? &*traj : nullptr, costate ? &*costate : nullptr);
  return outcome;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Switch point solver for switched boundary-value optimal control problems"};
  std::string mode_text;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<double> steps;
  std::optional<std::uint64_t> seed;
  app.add_option("mode", mode_text,
                 "solve | gradient | optimize | perturb-terminal | perturb-switch | remainder | "
                 "certificate")
      ->required();
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides config 'output')");
  app.add_option("--steps-per-unit", steps, "RK4 steps per unit time");
  app.add_option("--seed", seed, "seed for sampled checks");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const Mode mode = parse_mode(mode_text);
    RunConfig cfg = load_config(config_path, mode);
    if (out_dir) cfg.output = *out_dir;
    if (steps) {
      if (!(*steps >= 1.0)) throw ConfigError("--steps-per-unit must be >= 1");
      cfg.steps_per_unit = *steps;
    }
    if (seed) cfg.seed = *seed;
    const RunOutcome outcome = run(cfg);
    if (outcome.exit_code != kExitOk && outcome.report.contains("error")) {
      std::cerr << "spa: " << outcome.report["error"].get<std::string>() << "\n";
    }
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "spa: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "spa: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace spa::cli
