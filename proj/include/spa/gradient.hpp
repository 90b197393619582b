#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "spa/costate.hpp"
#include "spa/integrator.hpp"
#include "spa/problem.hpp"
#include "spa/shooting.hpp"
#include "spa/types.hpp"

namespace spa {

// H_j(x, p, t) = p F_j(x, t).
template <typename Scalar>
Scalar hamiltonian(const ProblemDef<Scalar>& p, std::size_t phase, const Vector<Scalar>& x,
                   const RowVector<Scalar>& pvec, Scalar t) {
  if (phase >= p.phases.size()) throw IndexOutOfRange("phase index out of range");
  return pvec.dot(p.phases[phase].eval(x, t).transpose());
}

template <typename Scalar>
struct HamiltonianPair {
  Scalar left = Scalar(0);   // H_{i-1}
  Scalar right = Scalar(0);  // H_i
};

template <typename Scalar>
struct GradientReport {
  Scalar objective = Scalar(0);
  Vector<Scalar> grad;
  std::vector<HamiltonianPair<Scalar>> hamiltonians;
  ShootingResult<Scalar> shooting;
  std::optional<CostateTrajectory<Scalar>> costate;
  bool costate_ok = false;
  // False when shooting did not converge; objective and grad are then withheld.
  bool ok = false;
};

struct EvaluateOptions {
  ShootingOptions shooting;
  double tol_costate = 1e-9;
};

// One boundary solve, one Psi integration, one small linear solve, then the
// Hamiltonian jumps at every switch node.
template <typename Scalar>
GradientReport<Scalar> evaluate(const ProblemDef<Scalar>& p, const SwitchSchedule<Scalar>& s,
                                const Vector<Scalar>& theta_hint,
                                const EvaluateOptions& opts = {}) {
  validate_schedule(p, s, Scalar(0));
  GradientReport<Scalar> report;
  report.shooting = solve_boundary(p, s, theta_hint, opts.shooting);
  if (!report.shooting.converged) return report;

  const Trajectory<Scalar>& traj = report.shooting.trajectory;
  const MatrixTrajectory<Scalar> psi = integrate_psi(p, traj);
  CostateTrajectory<Scalar> ct =
      solve_costate(p, traj, psi, opts.shooting.condition_limit);

  const Vector<Scalar> xT = traj.terminal();
  report.objective = p.objective(xT);
  const RowVector<Scalar> pT = ct.terminal();
  const RowVector<Scalar> pF = pT(p.partition.F);
  report.costate_ok = inf_norm(pF - ct.terminal_gradient) <= Scalar(opts.tol_costate);

  const std::size_t m = p.num_switches();
  report.grad.resize(static_cast<Index>(m));
  report.hamiltonians.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t node = traj.mesh.switch_nodes[i];
    const Vector<Scalar> x = traj.at(node);
    const RowVector<Scalar> pv = ct.at(node);
    const Scalar t = traj.mesh.nodes[node];
    auto& h = report.hamiltonians[i];
    h.left = hamiltonian(p, i, x, pv, t);
    h.right = hamiltonian(p, i + 1, x, pv, t);
    report.grad(static_cast<Index>(i)) = h.left - h.right;
  }
  report.costate = std::move(ct);
  report.ok = report.grad.allFinite() && std::isfinite(static_cast<double>(report.objective));
  return report;
}

template <typename Scalar>
struct ObjectiveEval {
  Scalar objective = Scalar(0);
  Vector<Scalar> theta;
  bool converged = false;
};

// C(s) alone: a boundary solve and the objective at x(T). No costate.
template <typename Scalar>
ObjectiveEval<Scalar> objective_value(const ProblemDef<Scalar>& p,
                                      const SwitchSchedule<Scalar>& s,
                                      const Vector<Scalar>& theta_hint,
                                      const ShootingOptions& opts = {}) {
  validate_schedule(p, s, Scalar(0));
  ObjectiveEval<Scalar> out;
  const auto sol = solve_boundary(p, s, theta_hint, opts);
  out.theta = sol.theta;
  out.converged = sol.converged;
  if (sol.converged) out.objective = p.objective(sol.trajectory.terminal());
  return out;
}

struct FdOptions {
  double h = 1e-5;
  int max_halvings = 3;
  ShootingOptions shooting = [] {
    ShootingOptions o;
    o.tol_res = 1e-12;
    return o;
  }();
};

// Central differences of C(s), every probe a converged boundary solve.
template <typename Scalar>
Vector<Scalar> fd_gradient_oracle(const ProblemDef<Scalar>& p, const SwitchSchedule<Scalar>& s,
                                  const Vector<Scalar>& theta_hint,
                                  const FdOptions& opts = {}) {
  const Index m = s.size();
  Vector<Scalar> grad(m);
  for (Index i = 0; i < m; ++i) {
    Scalar h = Scalar(opts.h);
    bool done = false;
    for (int attempt = 0; attempt <= opts.max_halvings && !done; ++attempt, h /= 2) {
      SwitchSchedule<Scalar> plus = s;
      SwitchSchedule<Scalar> minus = s;
      plus(i) += h;
      minus(i) -= h;
      try {
        const auto cp = objective_value(p, plus, theta_hint, opts.shooting);
        const auto cm = objective_value(p, minus, theta_hint, opts.shooting);
        if (cp.converged && cm.converged) {
          grad(i) = (cp.objective - cm.objective) / (plus(i) - minus(i));
          done = true;
        }
      } catch (const NonFiniteState&) {
      } catch (const SingularMatrix&) {
      }
    }
    if (!done) throw ShootingFailure("finite-difference probe failed to solve the boundary problem");
  }
  return grad;
}

}  // namespace spa
