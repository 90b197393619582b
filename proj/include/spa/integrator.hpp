#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "spa/problem.hpp"
#include "spa/types.hpp"

namespace spa {

// Time grid over [0, T] in which every switch time is a node. Interval k is
// [nodes[k], nodes[k+1]] and is integrated with phase phase_of_interval[k].
template <typename Scalar>
struct Mesh {
  std::vector<Scalar> nodes;
  std::vector<int> phase_of_interval;
  std::vector<std::size_t> switch_nodes;  // node index of s_1, ..., s_{N-1}

  std::size_t size() const { return nodes.size(); }
  std::size_t intervals() const { return phase_of_interval.size(); }

  // Phase reported for a node: the phase of the interval it starts; the
  // terminal node reports the last phase.
  int phase_at_node(std::size_t k) const {
    return k < phase_of_interval.size() ? phase_of_interval[k] : phase_of_interval.back();
  }
};

struct MeshOptions {
  double steps_per_unit = 200.0;
};

template <typename Scalar>
Mesh<Scalar> build_mesh(Scalar horizon, const SwitchSchedule<Scalar>& s,
                        double steps_per_unit) {
  validate_schedule(horizon, s, Scalar(0));
  if (!(steps_per_unit >= 1.0)) throw Error("steps_per_unit must be at least 1");

  Mesh<Scalar> mesh;
  mesh.nodes.push_back(Scalar(0));
  for (Index i = 0; i <= s.size(); ++i) {
    const Scalar a = i == 0 ? Scalar(0) : s(i - 1);
    const Scalar b = i < s.size() ? s(i) : horizon;
    // The small offset keeps products like 10 * (0.7 - 0.3) from rounding up.
    const double target = steps_per_unit * static_cast<double>(b - a);
    const long steps = std::max(1L, static_cast<long>(std::ceil(target - 1e-9)));
    for (long k = 1; k <= steps; ++k) {
      mesh.nodes.push_back(k == steps ? b : a + (b - a) * Scalar(k) / Scalar(steps));
      mesh.phase_of_interval.push_back(static_cast<int>(i));
    }
    if (i < s.size()) mesh.switch_nodes.push_back(mesh.nodes.size() - 1);
  }
  return mesh;
}

template <typename Scalar>
struct Trajectory {
  Mesh<Scalar> mesh;
  Matrix<Scalar> values;  // n x nodes, column k is x(t_k)
  Vector<Scalar> theta;   // x_J(0)

  Vector<Scalar> at(std::size_t k) const { return values.col(static_cast<Index>(k)); }
  Vector<Scalar> terminal() const { return values.col(values.cols() - 1); }
};

enum class FundamentalKind { Phi, Psi };

template <typename Scalar>
struct MatrixTrajectory {
  Mesh<Scalar> mesh;
  std::vector<Matrix<Scalar>> matrices;
  FundamentalKind kind = FundamentalKind::Phi;

  const Matrix<Scalar>& terminal() const { return matrices.back(); }
};

namespace detail {

template <typename Rhs, typename State, typename Scalar>
State rk4_step(const Rhs& rhs, const State& y, Scalar t, Scalar h) {
  const State k1 = rhs(y, t);
  const State k2 = rhs(State(y + (h / 2) * k1), t + h / 2);
  const State k3 = rhs(State(y + (h / 2) * k2), t + h / 2);
  const State k4 = rhs(State(y + h * k3), t + h);
  return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

// Jacobians at the three distinct RK4 stage times of one interval. The
// midpoint state comes from the cubic Hermite interpolant of the stored node
// values and the phase derivative at both ends.
template <typename Scalar>
struct StageJacobians {
  Matrix<Scalar> start;
  Matrix<Scalar> mid;
  Matrix<Scalar> end;
};

template <typename Scalar>
StageJacobians<Scalar> stage_jacobians(const ProblemDef<Scalar>& p,
                                       const Trajectory<Scalar>& traj, std::size_t k) {
  const auto& phase = p.phases[static_cast<std::size_t>(traj.mesh.phase_of_interval[k])];
  const Scalar t0 = traj.mesh.nodes[k];
  const Scalar t1 = traj.mesh.nodes[k + 1];
  const Scalar h = t1 - t0;
  const Vector<Scalar> x0 = traj.at(k);
  const Vector<Scalar> x1 = traj.at(k + 1);
  const Vector<Scalar> f0 = phase.eval(x0, t0);
  const Vector<Scalar> f1 = phase.eval(x1, t1);
  const Vector<Scalar> xm = (x0 + x1) / 2 + (h / 8) * (f0 - f1);
  return {phase.jacobian(x0, t0), phase.jacobian(xm, t0 + h / 2), phase.jacobian(x1, t1)};
}

template <typename Scalar>
Matrix<Scalar> linear_rk4_step(const StageJacobians<Scalar>& a, const Matrix<Scalar>& y,
                               Scalar h) {
  const Matrix<Scalar> k1 = a.start * y;
  const Matrix<Scalar> k2 = a.mid * (y + (h / 2) * k1);
  const Matrix<Scalar> k3 = a.mid * (y + (h / 2) * k2);
  const Matrix<Scalar> k4 = a.end * (y + h * k3);
  return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

template <typename Scalar>
MatrixTrajectory<Scalar> integrate_fundamental(const ProblemDef<Scalar>& p,
                                               const Trajectory<Scalar>& traj,
                                               FundamentalKind kind) {
  const Index n = p.n();
  MatrixTrajectory<Scalar> out;
  out.mesh = traj.mesh;
  out.kind = kind;
  out.matrices.reserve(traj.mesh.size());
  out.matrices.push_back(Matrix<Scalar>::Identity(n, n));
  for (std::size_t k = 0; k < traj.mesh.intervals(); ++k) {
    StageJacobians<Scalar> a = stage_jacobians(p, traj, k);
    if (kind == FundamentalKind::Psi) {
      for (Matrix<Scalar>* m : {&a.start, &a.mid, &a.end}) {
        m->transposeInPlace();
        *m = -*m;
      }
    }
    const Scalar h = traj.mesh.nodes[k + 1] - traj.mesh.nodes[k];
    Matrix<Scalar> next = linear_rk4_step(a, out.matrices.back(), h);
    if (!next.allFinite()) {
      std::ostringstream os;
      os << (kind == FundamentalKind::Phi ? "Phi" : "Psi")
         << " became non-finite at node " << k + 1;
      throw NonFiniteState(os.str(), k + 1);
    }
    out.matrices.push_back(std::move(next));
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
Vector<Scalar> initial_state(const ProblemDef<Scalar>& p, const Vector<Scalar>& theta) {
  const auto& part = p.partition;
  if (theta.size() != static_cast<Index>(part.J.size())) {
    throw DimensionMismatch("theta must have |J| components");
  }
  Vector<Scalar> x0(p.n());
  x0(part.I) = p.b_I;
  x0(part.J) = theta;
  return x0;
}

// Classic RK4 on the switch-aligned mesh; x_I(0) = b_I is copied, x_J(0) = theta.
template <typename Scalar>
Trajectory<Scalar> integrate_state(const ProblemDef<Scalar>& p,
                                   const SwitchSchedule<Scalar>& s,
                                   const Vector<Scalar>& theta,
                                   const MeshOptions& mesh_opts = {}) {
  if (static_cast<std::size_t>(s.size()) != p.num_switches()) {
    throw InvalidSchedule("schedule length does not match the number of phases");
  }
  if (!theta.allFinite()) throw NonFiniteState("theta is not finite", 0);

  Trajectory<Scalar> traj;
  traj.mesh = build_mesh(p.horizon, s, mesh_opts.steps_per_unit);
  traj.theta = theta;
  traj.values.resize(p.n(), static_cast<Index>(traj.mesh.size()));
  traj.values.col(0) = initial_state(p, theta);

  for (std::size_t k = 0; k < traj.mesh.intervals(); ++k) {
    const auto& phase = p.phases[static_cast<std::size_t>(traj.mesh.phase_of_interval[k])];
    const Scalar t0 = traj.mesh.nodes[k];
    const Scalar h = traj.mesh.nodes[k + 1] - t0;
    const Vector<Scalar> x = traj.values.col(static_cast<Index>(k));
    const Vector<Scalar> next = detail::rk4_step(phase.eval, x, t0, h);
    if (!next.allFinite()) {
      std::ostringstream os;
      os << "state became non-finite at node " << k + 1 << " (t = "
         << static_cast<double>(traj.mesh.nodes[k + 1]) << ")";
      throw NonFiniteState(os.str(), k + 1);
    }
    traj.values.col(static_cast<Index>(k + 1)) = next;
  }
  return traj;
}

// Phi' = grad_x F(x(t), t) Phi, Phi(0) = I, along a stored trajectory.
template <typename Scalar>
MatrixTrajectory<Scalar> integrate_phi(const ProblemDef<Scalar>& p,
                                       const Trajectory<Scalar>& traj) {
  return detail::integrate_fundamental(p, traj, FundamentalKind::Phi);
}

// Psi' = -grad_x F(x(t), t)^T Psi, Psi(0) = I.
template <typename Scalar>
MatrixTrajectory<Scalar> integrate_psi(const ProblemDef<Scalar>& p,
                                       const Trajectory<Scalar>& traj) {
  return detail::integrate_fundamental(p, traj, FundamentalKind::Psi);
}

}  // namespace spa
