#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "spa/integrator.hpp"
#include "spa/linalg.hpp"
#include "spa/problem.hpp"
#include "spa/types.hpp"

namespace spa {

struct ShootingOptions {
  double tol_res = 1e-10;   // on ||g||_inf
  int max_iter = 50;
  int max_halvings = 20;
  double condition_limit = kConditionLimit;
  MeshOptions mesh;
};

template <typename Scalar>
struct ResidualEval {
  Vector<Scalar> residual;
  Trajectory<Scalar> trajectory;
};

template <typename Scalar>
struct ShootingResult {
  Vector<Scalar> theta;
  Trajectory<Scalar> trajectory;
  Vector<Scalar> residual;
  Scalar residual_norm = Scalar(0);
  int iterations = 0;
  Scalar gamma = Scalar(0);            // ||Phi_EJ(T)^{-1}||_inf at theta
  Matrix<Scalar> jacobian;             // Phi_EJ(T) at theta
  double condition = 1.0;
  bool converged = false;
};

// g(theta) = y_E(T) - b_E - pi for the trajectory started at x_J(0) = theta.
template <typename Scalar>
ResidualEval<Scalar> shoot_residual(const ProblemDef<Scalar>& p,
                                    const SwitchSchedule<Scalar>& s,
                                    const Vector<Scalar>& theta, const Vector<Scalar>& pi,
                                    const MeshOptions& mesh = {}) {
  const auto& E = p.partition.E;
  if (pi.size() != static_cast<Index>(E.size())) {
    throw DimensionMismatch("terminal perturbation must have |E| components");
  }
  ResidualEval<Scalar> out{Vector<Scalar>(), integrate_state(p, s, theta, mesh)};
  const Vector<Scalar> xT = out.trajectory.terminal();
  out.residual = xT(E) - p.b_E - pi;
  return out;
}

template <typename Scalar>
Matrix<Scalar> shooting_jacobian(const ProblemDef<Scalar>& p, const Trajectory<Scalar>& traj) {
  const MatrixTrajectory<Scalar> phi = integrate_phi(p, traj);
  return phi.terminal()(p.partition.E, p.partition.J);
}

template <typename Scalar>
Scalar inverse_norm(const SmallSolver<Scalar>& lu) {
  return op_inf_norm(lu.inverse());
}

// Guarded Newton on g(theta) = 0 with the full Jacobian Phi_EJ(T) rebuilt
// along the current trajectory every iteration. A step that increases
// ||g||_inf is halved up to max_halvings times.
template <typename Scalar>
ShootingResult<Scalar> solve_boundary(const ProblemDef<Scalar>& p,
                                      const SwitchSchedule<Scalar>& s,
                                      const Vector<Scalar>& theta0, const Vector<Scalar>& pi,
                                      const ShootingOptions& opts = {}) {
  ResidualEval<Scalar> cur = shoot_residual(p, s, theta0, pi, opts.mesh);
  ShootingResult<Scalar> result;
  result.theta = theta0;

  if (p.partition.E.empty()) {
    result.trajectory = std::move(cur.trajectory);
    result.residual = Vector<Scalar>(0);
    result.jacobian = Matrix<Scalar>(0, 0);
    result.converged = true;
    return result;
  }

  Scalar norm = inf_norm(cur.residual);
  Vector<Scalar> theta = theta0;
  int iterations = 0;
  bool converged = norm <= Scalar(opts.tol_res);
  while (!converged && iterations < opts.max_iter) {
    const Matrix<Scalar> jac = shooting_jacobian(p, cur.trajectory);
    const SmallSolver<Scalar> lu(jac);
    lu.require_condition(opts.condition_limit, "shooting Jacobian Phi_EJ(T)");
    const Vector<Scalar> step = -lu.solve(cur.residual);

    bool accepted = false;
    Scalar lambda = Scalar(1);
    for (int h = 0; h <= opts.max_halvings; ++h, lambda /= 2) {
      const Vector<Scalar> trial = theta + lambda * step;
      try {
        ResidualEval<Scalar> next = shoot_residual(p, s, trial, pi, opts.mesh);
        const Scalar next_norm = inf_norm(next.residual);
        if (std::isfinite(static_cast<double>(next_norm)) && next_norm <= norm) {
          theta = trial;
          cur = std::move(next);
          norm = next_norm;
          accepted = true;
          break;
        }
      } catch (const NonFiniteState&) {
        // blow-up on this trial: shrink
      }
    }
    if (!accepted) break;
    ++iterations;
    converged = norm <= Scalar(opts.tol_res);
  }

  result.theta = theta;
  result.residual = cur.residual;
  result.residual_norm = norm;
  result.iterations = iterations;
  result.converged = converged;
  result.jacobian = shooting_jacobian(p, cur.trajectory);
  const SmallSolver<Scalar> lu(result.jacobian);
  result.condition = lu.condition();
  if (std::isfinite(result.condition)) result.gamma = inverse_norm(lu);
  result.trajectory = std::move(cur.trajectory);
  return result;
}

template <typename Scalar>
ShootingResult<Scalar> solve_boundary(const ProblemDef<Scalar>& p,
                                      const SwitchSchedule<Scalar>& s,
                                      const Vector<Scalar>& theta0,
                                      const ShootingOptions& opts = {}) {
  return solve_boundary(p, s, theta0,
                        Vector<Scalar>::Zero(static_cast<Index>(p.partition.E.size())).eval(),
                        opts);
}

// Numerical instance of the Newton existence result: for the map
// eta -> g(theta_start + eta) on the ball ||eta||_inf <= r with reference
// matrix L = Phi_EJ(T) at theta_star, gamma = ||L^{-1}||, epsilon is the
// largest sampled ||grad g - L||, delta = ||g(theta_start)||. When
// epsilon*gamma < 1 and delta <= r(1 - gamma*epsilon)/gamma, a root exists
// within delta*gamma/(1 - epsilon*gamma) of theta_start. Sampling gives a
// lower estimate of the supremum, so epsilon is reported as sampled.
template <typename Scalar>
struct NewtonCertificate {
  Scalar gamma = Scalar(0);
  Scalar epsilon = Scalar(0);
  Scalar delta = Scalar(0);
  Scalar r = Scalar(0);
  std::optional<Scalar> bound;
  bool hypotheses_hold = false;
  Vector<Scalar> theta_start;
  int samples_used = 0;
};

struct CertificateOptions {
  int sample_count = 16;
  std::uint64_t seed = 1;
  ShootingOptions shooting;
};

template <typename Scalar>
NewtonCertificate<Scalar> newton_certificate(const ProblemDef<Scalar>& p,
                                             const SwitchSchedule<Scalar>& s,
                                             const Vector<Scalar>& theta_star,
                                             const Vector<Scalar>& offset, Scalar r,
                                             const CertificateOptions& opts = {}) {
  if (!(r > Scalar(0))) throw Error("certificate radius must be positive");
  if (offset.size() != theta_star.size()) {
    throw DimensionMismatch("offset must match theta in length");
  }
  const Index m = static_cast<Index>(p.partition.E.size());
  if (m == 0) throw DimensionMismatch("certificate needs at least one terminal constraint");
  const Vector<Scalar> zero_pi = Vector<Scalar>::Zero(m);

  NewtonCertificate<Scalar> cert;
  cert.r = r;
  cert.theta_start = theta_star + offset;

  const auto base = shoot_residual(p, s, theta_star, zero_pi, opts.shooting.mesh);
  const Matrix<Scalar> reference = shooting_jacobian(p, base.trajectory);
  const SmallSolver<Scalar> lu(reference);
  lu.require_condition(opts.shooting.condition_limit, "shooting Jacobian Phi_EJ(T)");
  cert.gamma = inverse_norm(lu);

  const auto start = shoot_residual(p, s, cert.theta_start, zero_pi, opts.shooting.mesh);
  cert.delta = inf_norm(start.residual);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto deviation = [&](const Vector<Scalar>& theta) -> Scalar {
    try {
      const auto eval = shoot_residual(p, s, theta, zero_pi, opts.shooting.mesh);
      return op_inf_norm(shooting_jacobian(p, eval.trajectory) - reference);
    } catch (const NonFiniteState&) {
      return std::numeric_limits<Scalar>::infinity();
    }
  };

  cert.epsilon = op_inf_norm(shooting_jacobian(p, start.trajectory) - reference);
  cert.samples_used = 1;
  for (int k = 0; k < opts.sample_count; ++k) {
    Vector<Scalar> theta = cert.theta_start;
    for (Index j = 0; j < theta.size(); ++j) theta(j) += r * Scalar(unit(rng));
    using std::max;
    cert.epsilon = max(cert.epsilon, deviation(theta));
    ++cert.samples_used;
  }

  const Scalar eg = cert.epsilon * cert.gamma;
  cert.hypotheses_hold = eg < Scalar(1) && cert.delta <= r * (Scalar(1) - eg) / cert.gamma;
  if (cert.hypotheses_hold) cert.bound = cert.delta * cert.gamma / (Scalar(1) - eg);
  return cert;
}

}  // namespace spa
