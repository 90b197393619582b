#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "spa/gradient.hpp"
#include "spa/shooting.hpp"
#include "spa/types.hpp"

namespace spa {

// Least-squares slope of log(y) against log(x). Needs at least two points.
inline std::optional<double> loglog_slope(const std::vector<double>& x,
                                          const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / den;
}

struct PerturbationCase {
  double magnitude = 0.0;
  double response = 0.0;  // ||theta(perturbed) - theta(base)||_inf
  double ratio = 0.0;     // response / magnitude
  int direction = 0;
  bool ok = false;
  std::string failure;
};

struct PerturbationStudy {
  std::vector<double> magnitudes;
  std::vector<PerturbationCase> cases;
  std::vector<double> ratios;    // of the successful cases, in input order
  std::optional<double> reference;  // gamma for terminal studies; none for switch studies
  std::optional<double> slope;      // log-log exponent of response vs magnitude
  std::vector<double> base_theta;
};

struct StudyOptions {
  ShootingOptions shooting = [] {
    ShootingOptions o;
    o.tol_res = 1e-13;
    return o;
  }();
};

namespace detail {

inline void require_decreasing(const std::vector<double>& magnitudes) {
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    if (!(magnitudes[i] > 0.0)) throw Error("perturbation magnitudes must be positive");
    if (i > 0 && !(magnitudes[i] < magnitudes[i - 1])) {
      throw Error("perturbation magnitudes must be strictly decreasing");
    }
  }
}

inline std::optional<double> response_slope(const std::vector<PerturbationCase>& cases) {
  std::vector<double> xs, ys;
  for (const auto& c : cases) {
    if (c.ok && c.response > 0.0) {
      xs.push_back(c.magnitude);
      ys.push_back(c.response);
    }
  }
  return loglog_slope(xs, ys);
}

template <typename Scalar>
std::vector<double> to_std(const Vector<Scalar>& v) {
  std::vector<double> out(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(v(i));
  return out;
}

}  // namespace detail

// Response of theta = x_J(0) to b_E -> b_E + pi for pi = magnitude * direction.
// Directions default to the canonical basis of the E-block.
template <typename Scalar>
PerturbationStudy terminal_perturbation_study(const ProblemDef<Scalar>& p,
                                              const SwitchSchedule<Scalar>& s,
                                              const Vector<Scalar>& theta_hint,
                                              std::vector<Vector<Scalar>> directions,
                                              const std::vector<double>& magnitudes,
                                              const StudyOptions& opts = {}) {
  detail::require_decreasing(magnitudes);
  const Index m = static_cast<Index>(p.partition.E.size());
  if (m == 0) throw DimensionMismatch("terminal study needs at least one terminal constraint");
  if (directions.empty()) {
    for (Index k = 0; k < m; ++k) directions.push_back(Vector<Scalar>::Unit(m, k));
  }

  const auto base = solve_boundary(p, s, theta_hint, opts.shooting);
  if (!base.converged) throw ShootingFailure("base boundary problem did not converge");

  PerturbationStudy study;
  study.magnitudes = magnitudes;
  study.reference = static_cast<double>(base.gamma);
  study.base_theta = detail::to_std(base.theta);

  for (std::size_t d = 0; d < directions.size(); ++d) {
    const Vector<Scalar>& dir = directions[d];
    if (dir.size() != m) throw DimensionMismatch("direction must have |E| components");
    const Scalar dnorm = inf_norm(dir);
    for (double mag : magnitudes) {
      PerturbationCase c;
      c.magnitude = mag;
      c.direction = static_cast<int>(d);
      const Vector<Scalar> pi = (Scalar(mag) / dnorm) * dir;
      try {
        const auto sol = solve_boundary(p, s, base.theta, pi, opts.shooting);
        if (sol.converged) {
          c.response = static_cast<double>(inf_norm(Vector<Scalar>(sol.theta - base.theta)));
          c.ratio = c.response / static_cast<double>(inf_norm(pi));
          c.ok = true;
          study.ratios.push_back(c.ratio);
        } else {
          c.failure = "boundary solve did not converge";
        }
      } catch (const Error& e) {
        c.failure = e.what();
      }
      study.cases.push_back(std::move(c));
    }
  }
  study.slope = detail::response_slope(study.cases);
  return study;
}

// Response of theta to s_i -> s_i + delta. Bounded ratios are the numerical
// face of Lipschitz stability in the switch point. Index is 1-based.
template <typename Scalar>
PerturbationStudy switch_perturbation_study(const ProblemDef<Scalar>& p,
                                            const SwitchSchedule<Scalar>& s,
                                            const Vector<Scalar>& theta_hint, int index,
                                            const std::vector<double>& deltas,
                                            const StudyOptions& opts = {}) {
  PerturbationStudy study;
  study.magnitudes = deltas;
  if (deltas.empty()) return study;
  detail::require_decreasing(deltas);
  if (index < 1 || index > s.size()) throw IndexOutOfRange("switch index out of range");

  const auto base = solve_boundary(p, s, theta_hint, opts.shooting);
  if (!base.converged) throw ShootingFailure("base boundary problem did not converge");
  study.base_theta = detail::to_std(base.theta);

  for (double delta : deltas) {
    PerturbationCase c;
    c.magnitude = delta;
    SwitchSchedule<Scalar> moved = s;
    moved(index - 1) += Scalar(delta);
    try {
      const auto sol = solve_boundary(p, moved, base.theta, opts.shooting);
      if (sol.converged) {
        const Scalar actual = moved(index - 1) - s(index - 1);
        c.response = static_cast<double>(inf_norm(Vector<Scalar>(sol.theta - base.theta)));
        c.ratio = c.response / static_cast<double>(actual);
        c.ok = true;
        study.ratios.push_back(c.ratio);
      } else {
        c.failure = "boundary solve did not converge";
      }
    } catch (const Error& e) {
      c.failure = e.what();
    }
    study.cases.push_back(std::move(c));
  }
  study.slope = detail::response_slope(study.cases);
  return study;
}

struct RemainderCase {
  double delta = 0.0;
  double objective = 0.0;
  double remainder = 0.0;  // |C(s + delta e_i) - C(s) - delta * grad_i|
  bool ok = false;
  std::string failure;
};

struct RemainderStudy {
  std::vector<double> deltas;
  std::vector<RemainderCase> cases;
  std::vector<double> remainders;
  double base_objective = 0.0;
  double gradient = 0.0;
  double noise_floor = 0.0;
  std::optional<double> slope;
  int fitted_points = 0;
};

// First-order expansion check of C in switch i (1-based): the remainder
// should scale like delta^2. Points under 1e-13 * max(1, |C|) are excluded
// from the fit.
template <typename Scalar>
RemainderStudy remainder_study(const ProblemDef<Scalar>& p, const SwitchSchedule<Scalar>& s,
                               const Vector<Scalar>& theta_hint, int index,
                               const std::vector<double>& deltas,
                               const StudyOptions& opts = {}) {
  if (index < 1 || index > s.size()) throw IndexOutOfRange("switch index out of range");
  for (double d : deltas) {
    if (!(d > 0.0)) throw Error("remainder deltas must be positive");
  }
  EvaluateOptions eopts;
  eopts.shooting = opts.shooting;
  const auto base = evaluate(p, s, theta_hint, eopts);
  if (!base.ok) throw ShootingFailure("base boundary problem did not converge");

  RemainderStudy study;
  study.deltas = deltas;
  study.base_objective = static_cast<double>(base.objective);
  study.gradient = static_cast<double>(base.grad(index - 1));
  study.noise_floor = 1e-13 * std::max(1.0, std::abs(study.base_objective));

  std::vector<double> xs, ys;
  for (double delta : deltas) {
    RemainderCase c;
    c.delta = delta;
    SwitchSchedule<Scalar> moved = s;
    moved(index - 1) += Scalar(delta);
    try {
      const auto val = objective_value(p, moved, base.shooting.theta, opts.shooting);
      if (val.converged) {
        const Scalar actual = moved(index - 1) - s(index - 1);
        c.objective = static_cast<double>(val.objective);
        c.remainder = std::abs(static_cast<double>(val.objective - base.objective -
                                                   actual * base.grad(index - 1)));
        c.ok = true;
        study.remainders.push_back(c.remainder);
        if (c.remainder >= study.noise_floor) {
          xs.push_back(delta);
          ys.push_back(c.remainder);
        }
      } else {
        c.failure = "boundary solve did not converge";
      }
    } catch (const Error& e) {
      c.failure = e.what();
    }
    study.cases.push_back(std::move(c));
  }
  study.fitted_points = static_cast<int>(xs.size());
  study.slope = loglog_slope(xs, ys);
  return study;
}

}  // namespace spa
