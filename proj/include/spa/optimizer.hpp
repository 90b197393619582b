#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "spa/gradient.hpp"
#include "spa/problem.hpp"
#include "spa/types.hpp"

namespace spa {

// Euclidean projection onto
//   { eps <= s_1, s_i + eps <= s_{i+1}, s_m <= T - eps }.
// With z_i = s_i - i*eps the set becomes 0 <= z_1 <= ... <= z_m <= T - (m+1)eps,
// so the projection is an isotonic regression (pool adjacent violators)
// followed by a clamp to the box.
template <typename Scalar>
SwitchSchedule<Scalar> project_schedule(const Vector<Scalar>& s, Scalar horizon,
                                        Scalar eps_sep) {
  const Index m = s.size();
  if (Scalar(m + 1) * eps_sep > horizon) {
    throw InfeasiblePolytope("no schedule fits the horizon with the requested separation");
  }
  Vector<Scalar> z(m);
  for (Index i = 0; i < m; ++i) z(i) = s(i) - Scalar(i + 1) * eps_sep;

  // Blocks of pooled values: (sum, count).
  std::vector<Scalar> sums;
  std::vector<Index> counts;
  for (Index i = 0; i < m; ++i) {
    sums.push_back(z(i));
    counts.push_back(1);
    while (sums.size() > 1 &&
           sums[sums.size() - 2] / Scalar(counts[counts.size() - 2]) >
               sums.back() / Scalar(counts.back())) {
      sums[sums.size() - 2] += sums.back();
      counts[counts.size() - 2] += counts.back();
      sums.pop_back();
      counts.pop_back();
    }
  }
  const Scalar upper = horizon - Scalar(m + 1) * eps_sep;
  SwitchSchedule<Scalar> out(m);
  Index i = 0;
  for (std::size_t b = 0; b < sums.size(); ++b) {
    Scalar v = sums[b] / Scalar(counts[b]);
    v = std::min(std::max(v, Scalar(0)), upper);
    for (Index k = 0; k < counts[b]; ++k, ++i) out(i) = v + Scalar(i + 1) * eps_sep;
  }
  // Already-feasible points come back untouched rather than shifted by rounding.
  bool feasible = true;
  for (Index k = 0; k <= m && feasible; ++k) {
    const Scalar lo = k == 0 ? Scalar(0) : s(k - 1);
    const Scalar hi = k < m ? s(k) : horizon;
    feasible = hi - lo >= eps_sep;
  }
  return feasible ? SwitchSchedule<Scalar>(s) : out;
}

enum class OptimizeMethod { GradientDescent, Lbfgs };

enum class Termination { GradTol, MaxIters, LineSearchFailure, Boundary, EvaluationFailure };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::GradTol: return "grad_tol";
    case Termination::MaxIters: return "max_iters";
    case Termination::LineSearchFailure: return "line_search_failure";
    case Termination::Boundary: return "boundary";
    case Termination::EvaluationFailure: return "evaluation_failure";
  }
  return "unknown";
}

inline std::string to_string(OptimizeMethod m) {
  return m == OptimizeMethod::Lbfgs ? "lbfgs" : "gradient-descent";
}

struct OptimizeOptions {
  OptimizeMethod method = OptimizeMethod::Lbfgs;
  int max_iters = 200;
  double grad_tol = 1e-8;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int lbfgs_memory = 10;
  double eps_sep = -1.0;  // negative: 1e-8 * T
  double min_step = 1e-14;
  EvaluateOptions evaluate;

  void validate() const {
    if (!(armijo_c > 0.0 && armijo_c <= 0.5)) throw Error("armijo_c must lie in (0, 0.5]");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
      throw Error("backtrack_factor must lie in (0, 1)");
    }
    if (lbfgs_memory < 1) throw Error("lbfgs_memory must be at least 1");
    if (max_iters < 0) throw Error("max_iters must be non-negative");
  }
};

template <typename Scalar>
struct OptimizeHistoryEntry {
  SwitchSchedule<Scalar> s;
  Scalar objective;
  Scalar grad_norm;
};

template <typename Scalar>
struct OptimizeResult {
  SwitchSchedule<Scalar> s_star;
  Scalar objective = Scalar(0);
  Scalar grad_norm = Scalar(0);  // projected gradient, inf-norm
  Vector<Scalar> gradient;       // raw gradient at s_star
  Vector<Scalar> theta;
  int iterations = 0;
  std::vector<OptimizeHistoryEntry<Scalar>> history;
  Termination termination = Termination::MaxIters;
  std::string message;
};

namespace detail {

template <typename Scalar>
Vector<Scalar> lbfgs_direction(const Vector<Scalar>& grad,
                               const std::deque<Vector<Scalar>>& steps,
                               const std::deque<Vector<Scalar>>& changes) {
  Vector<Scalar> q = -grad;
  const std::size_t k = steps.size();
  std::vector<Scalar> alpha(k);
  std::vector<Scalar> rho(k);
  for (std::size_t j = k; j-- > 0;) {
    rho[j] = Scalar(1) / changes[j].dot(steps[j]);
    alpha[j] = rho[j] * steps[j].dot(q);
    q -= alpha[j] * changes[j];
  }
  if (k > 0) q *= steps.back().dot(changes.back()) / changes.back().squaredNorm();
  for (std::size_t j = 0; j < k; ++j) {
    const Scalar beta = rho[j] * changes[j].dot(q);
    q += (alpha[j] - beta) * steps[j];
  }
  return q;
}

}  // namespace detail

// Projected gradient descent or projected L-BFGS with Armijo backtracking
// along the projection arc s(alpha) = P(s + alpha d).
template <typename Scalar>
OptimizeResult<Scalar> optimize(const ProblemDef<Scalar>& p, const SwitchSchedule<Scalar>& s0,
                                const OptimizeOptions& opts = {},
                                const Vector<Scalar>& theta0 = Vector<Scalar>()) {
  opts.validate();
  const Scalar horizon = p.horizon;
  const Scalar eps = opts.eps_sep < 0 ? default_eps_sep(horizon) : Scalar(opts.eps_sep);
  validate_schedule(horizon, s0, eps);
  if (static_cast<std::size_t>(s0.size()) != p.num_switches()) {
    throw InvalidSchedule("schedule length does not match the number of phases");
  }

  OptimizeResult<Scalar> res;
  Vector<Scalar> theta = theta0.size() == static_cast<Index>(p.partition.J.size())
                             ? theta0
                             : Vector<Scalar>::Zero(static_cast<Index>(p.partition.J.size()));

  auto eval = [&](const SwitchSchedule<Scalar>& s) {
    return evaluate(p, s, theta, opts.evaluate);
  };

  SwitchSchedule<Scalar> s = s0;
  GradientReport<Scalar> cur;
  try {
    cur = eval(s);
  } catch (const Error& e) {
    res.s_star = s;
    res.termination = Termination::EvaluationFailure;
    res.message = e.what();
    return res;
  }
  if (!cur.ok) {
    res.s_star = s;
    res.termination = Termination::EvaluationFailure;
    res.message = "boundary solve did not converge at the initial schedule";
    return res;
  }
  theta = cur.shooting.theta;

  auto projected_grad = [&](const SwitchSchedule<Scalar>& x, const Vector<Scalar>& g) {
    return Vector<Scalar>(x - project_schedule<Scalar>(x - g, horizon, eps));
  };

  std::deque<Vector<Scalar>> steps;
  std::deque<Vector<Scalar>> changes;
  const std::size_t memory = static_cast<std::size_t>(opts.lbfgs_memory);

  Vector<Scalar> pg = projected_grad(s, cur.grad);
  res.history.push_back({s, cur.objective, inf_norm(pg)});

  int iter = 0;
  Termination term = Termination::MaxIters;
  for (;;) {
    if (inf_norm(pg) <= Scalar(opts.grad_tol)) {
      term = inf_norm(cur.grad) <= Scalar(opts.grad_tol) ? Termination::GradTol
                                                         : Termination::Boundary;
      break;
    }
    if (iter >= opts.max_iters) {
      term = Termination::MaxIters;
      break;
    }

    Vector<Scalar> dir = opts.method == OptimizeMethod::Lbfgs
                             ? detail::lbfgs_direction(cur.grad, steps, changes)
                             : Vector<Scalar>(-cur.grad);
    if (!(cur.grad.dot(dir) < Scalar(0)) || !dir.allFinite()) {
      dir = -cur.grad;
      steps.clear();
      changes.clear();
    }
    // First steepest-descent step of L-BFGS is scaled to unit length.
    if (opts.method == OptimizeMethod::Lbfgs && steps.empty()) {
      dir /= std::max(Scalar(1), inf_norm(dir));
    }

    Scalar alpha = Scalar(1);
    bool accepted = false;
    bool steepest = opts.method == OptimizeMethod::GradientDescent || steps.empty();
    GradientReport<Scalar> next;
    SwitchSchedule<Scalar> trial;
    while (alpha >= Scalar(opts.min_step)) {
      trial = project_schedule<Scalar>(s + alpha * dir, horizon, eps);
      const Vector<Scalar> move = trial - s;
      if (move.squaredNorm() == Scalar(0)) break;
      const Scalar decrease = cur.grad.dot(move);
      if (!(decrease < Scalar(0))) {
        // Projection bent the quasi-Newton step uphill; restart from steepest descent.
        if (steepest) break;
        dir = -cur.grad / std::max(Scalar(1), inf_norm(cur.grad));
        steps.clear();
        changes.clear();
        steepest = true;
        alpha = Scalar(1);
        continue;
      }
      try {
        next = eval(trial);
      } catch (const Error&) {
        next.ok = false;
      }
      // A failed solve counts as +inf.
      if (next.ok && next.objective <= cur.objective + Scalar(opts.armijo_c) * decrease) {
        accepted = true;
        break;
      }
      alpha *= Scalar(opts.backtrack_factor);
    }
    if (!accepted) {
      term = Termination::LineSearchFailure;
      break;
    }

    const Vector<Scalar> step = trial - s;
    const Vector<Scalar> change = next.grad - cur.grad;
    if (opts.method == OptimizeMethod::Lbfgs && step.dot(change) > Scalar(1e-12)) {
      steps.push_back(step);
      changes.push_back(change);
      if (steps.size() > memory) {
        steps.pop_front();
        changes.pop_front();
      }
    }
    s = trial;
    cur = std::move(next);
    theta = cur.shooting.theta;
    pg = projected_grad(s, cur.grad);
    ++iter;
    res.history.push_back({s, cur.objective, inf_norm(pg)});
  }

  res.s_star = s;
  res.objective = cur.objective;
  res.grad_norm = inf_norm(pg);
  res.gradient = cur.grad;
  res.theta = theta;
  res.iterations = iter;
  res.termination = term;
  return res;
}

}  // namespace spa
