#pragma once

#include <cmath>
#include <sstream>

#include "spa/integrator.hpp"
#include "spa/linalg.hpp"
#include "spa/problem.hpp"
#include "spa/types.hpp"

namespace spa {

template <typename Scalar>
struct CostateTrajectory {
  Mesh<Scalar> mesh;
  Matrix<Scalar> values;  // n x nodes, column k is p(t_k)^T
  RowVector<Scalar> p0;
  RowVector<Scalar> terminal_gradient;  // grad_F C(x(T)), ordered like F
  double condition = 1.0;               // of Psi_FI(T)

  RowVector<Scalar> at(std::size_t k) const {
    return values.col(static_cast<Index>(k)).transpose();
  }
  RowVector<Scalar> terminal() const { return values.col(values.cols() - 1).transpose(); }
};

// p' = -p grad_x F with p_J(0) = 0 and p_F(T) = grad_F C(x(T)). Since
// p(t)^T = Psi(t) p(0)^T, the free block p_I(0) solves
// Psi_FI(T) p_I(0)^T = grad_F C(x(T))^T.
template <typename Scalar>
CostateTrajectory<Scalar> solve_costate(const ProblemDef<Scalar>& p,
                                        const Trajectory<Scalar>& traj,
                                        const MatrixTrajectory<Scalar>& psi,
                                        double condition_limit = kConditionLimit) {
  if (psi.kind != FundamentalKind::Psi || psi.matrices.size() != traj.mesh.size()) {
    throw DimensionMismatch("costate needs Psi on the trajectory's mesh");
  }
  const auto& part = p.partition;
  const Index n = p.n();
  const Vector<Scalar> xT = traj.terminal();
  const RowVector<Scalar> grad = p.objective_gradient(xT);

  CostateTrajectory<Scalar> ct;
  ct.mesh = traj.mesh;
  ct.terminal_gradient = grad(part.F);

  const Matrix<Scalar> psi_fi = psi.terminal()(part.F, part.I);
  const SmallSolver<Scalar> lu(psi_fi);
  lu.require_condition(condition_limit, "costate matrix Psi_FI(T)");
  ct.condition = lu.condition();

  Vector<Scalar> p0 = Vector<Scalar>::Zero(n);
  if (!part.I.empty()) {
    const Vector<Scalar> rhs = ct.terminal_gradient.transpose();
    p0(part.I) = lu.solve(rhs);
  }
  ct.p0 = p0.transpose();

  ct.values.resize(n, static_cast<Index>(ct.mesh.size()));
  for (std::size_t k = 0; k < ct.mesh.size(); ++k) {
    ct.values.col(static_cast<Index>(k)) = psi.matrices[k] * p0;
  }
  // p_J(0) is zero by construction, not by the product above.
  ct.values.col(0) = p0;
  return ct;
}

// Stored value at a mesh node; the time must match a node to within 1e-12 * max(1, T).
template <typename Scalar>
RowVector<Scalar> costate_at(const CostateTrajectory<Scalar>& ct, Scalar t) {
  using std::abs;
  const auto& nodes = ct.mesh.nodes;
  const Scalar tol = Scalar(1e-12) * std::max(Scalar(1), nodes.back());
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), t - tol);
  if (it == nodes.end() || abs(*it - t) > tol) {
    std::ostringstream os;
    os << "t = " << static_cast<double>(t) << " is not a mesh node";
    throw NotANode(os.str());
  }
  return ct.at(static_cast<std::size_t>(it - nodes.begin()));
}

}  // namespace spa
