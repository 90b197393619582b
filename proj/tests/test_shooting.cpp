#include <gtest/gtest.h>

#include "spa/bench.hpp"
#include "spa/shooting.hpp"

using namespace spa;
using V = Vector<double>;
using M = Matrix<double>;

namespace {

V vec(std::initializer_list<double> v) {
  V out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// x' = a x^2 on [0, 1], x(0) = theta unknown, x(1) = 0. Finite-time blow-up at theta = 1/a.
ProblemDef<double> riccati(double a) {
  ProblemDef<double> p;
  p.horizon = 1.0;
  p.partition = partition_indices({}, {1}, 1);
  p.b_I = V(0);
  p.b_E = vec({0.0});
  PhaseDynamics<double> ph;
  ph.eval = [a](const V& x, double) { return V(a * x.array().square()); };
  ph.jacobian = [a](const V& x, double) { return M::Constant(1, 1, 2 * a * x(0)); };
  p.phases.push_back(ph);
  p.objective = [](const V& x) { return x(0); };
  p.objective_gradient = [](const V&) { return RowVector<double>::Ones(1).eval(); };
  return p;
}

}  // namespace

TEST(ShootResidual, SwitchedIntegratorLinearInTheta) {
  const auto b = get_benchmark("switched-integrator");
  const V s = vec({1.0});
  EXPECT_NEAR(shoot_residual(b.problem, s, vec({0.0}), vec({0.0})).residual(0), 0.0, 1e-10);
  EXPECT_NEAR(shoot_residual(b.problem, s, vec({0.3}), vec({0.0})).residual(0), 0.3, 1e-10);
  EXPECT_NEAR(shoot_residual(b.problem, s, vec({0.3}), vec({0.1})).residual(0), 0.2, 1e-10);
}

TEST(ShootResidual, EmptyTerminalSet) {
  const auto b = get_benchmark("double-integrator-target", {{"free_terminal", 1.0}});
  const auto r = shoot_residual(b.problem, vec({0.5}), V(0), V(0));
  EXPECT_EQ(r.residual.size(), 0);
  EXPECT_THROW(shoot_residual(b.problem, vec({0.5}), V(0), vec({1.0})), DimensionMismatch);
}

TEST(SolveBoundary, LinearResidualOneIteration) {
  const auto b = get_benchmark("switched-integrator");
  const auto sol = solve_boundary(b.problem, vec({1.0}), vec({5.0}));
  EXPECT_TRUE(sol.converged);
  EXPECT_EQ(sol.iterations, 1);
  EXPECT_NEAR(sol.theta(0), 0.0, 1e-10);
  EXPECT_LE(sol.residual_norm, 1e-10);
  EXPECT_NEAR(sol.gamma, 1.0, 1e-12);
}

TEST(SolveBoundary, DoubleIntegratorTheta) {
  const auto b = get_benchmark("double-integrator-target");
  const auto sol = solve_boundary(b.problem, vec({0.5}), vec({0.0}));
  EXPECT_TRUE(sol.converged);
  EXPECT_NEAR(sol.theta(0), 1.0, 1e-9);
  EXPECT_LE(sol.iterations, 1);
}

TEST(SolveBoundary, EmptyTerminalSetShortCircuits) {
  const auto b = get_benchmark("double-integrator-target", {{"free_terminal", 1.0}});
  const auto sol = solve_boundary(b.problem, vec({0.5}), V(0));
  EXPECT_TRUE(sol.converged);
  EXPECT_EQ(sol.iterations, 0);
  EXPECT_EQ(sol.theta.size(), 0);
  EXPECT_EQ(sol.trajectory.mesh.size(), 401u);
}

TEST(SolveBoundary, NonlinearConvergesQuickly) {
  const auto b = get_benchmark("stacked-pair");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sol = solve_boundary(b.problem, b.default_schedule, vec({u(rng), u(rng)}));
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(sol.residual_norm, 1e-10);
    EXPECT_LE(sol.iterations, 5);
  }
}

TEST(SolveBoundary, PerturbationShiftsTarget) {
  const auto b = get_benchmark("double-integrator-target");
  const auto sol = solve_boundary(b.problem, vec({0.5}), vec({0.0}), vec({0.25}));
  EXPECT_NEAR(sol.theta(0), 1.25, 1e-9);
}

TEST(SolveBoundary, NonConvergenceIsFlaggedNotThrown) {
  const auto b = get_benchmark("stacked-pair");
  ShootingOptions opts;
  opts.max_iter = 1;
  opts.tol_res = 1e-15;
  const auto sol = solve_boundary(b.problem, b.default_schedule, vec({2.0, -2.0}), opts);
  EXPECT_FALSE(sol.converged);
  EXPECT_LE(sol.iterations, 1);
}

TEST(SolveBoundary, SingularJacobianThrows) {
  // x_E(T) does not depend on theta at all.
  ProblemDef<double> p;
  p.horizon = 1.0;
  p.partition = partition_indices({1}, {1}, 2);
  p.b_I = vec({0.0});
  p.b_E = vec({1.0});
  PhaseDynamics<double> ph;
  ph.eval = [](const V& x, double) { return V::Zero(x.size()).eval(); };
  ph.jacobian = [](const V&, double) { return M::Zero(2, 2).eval(); };
  p.phases.push_back(ph);
  p.objective = [](const V& x) { return x(0); };
  p.objective_gradient = [](const V&) { return RowVector<double>::Unit(2, 0).eval(); };
  EXPECT_THROW(solve_boundary(p, V(0), vec({0.0})), SingularMatrix);
}

TEST(NewtonCertificate, LinearProblemHoldsWithExactBound) {
  const auto b = get_benchmark("switched-integrator");
  const V s = vec({1.0});
  const auto sol = solve_boundary(b.problem, s, vec({0.0}));
  const auto cert = newton_certificate(b.problem, s, sol.theta, vec({0.05}), 0.1);
  EXPECT_LT(cert.epsilon, 1e-9);
  EXPECT_TRUE(cert.hypotheses_hold);
  ASSERT_TRUE(cert.bound.has_value());
  EXPECT_NEAR(*cert.bound, cert.delta * cert.gamma, 1e-12);
  EXPECT_NEAR(cert.delta, 0.05, 1e-10);
  EXPECT_EQ(cert.samples_used, 17);
}

TEST(NewtonCertificate, StartAtSolutionGivesZeroBound) {
  const auto b = get_benchmark("stacked-pair");
  ShootingOptions tight;
  tight.tol_res = 1e-14;
  const auto sol = solve_boundary(b.problem, b.default_schedule, vec({0.0, 0.0}), tight);
  const auto cert = newton_certificate(b.problem, b.default_schedule, sol.theta, vec({0.0, 0.0}), 0.1);
  EXPECT_TRUE(cert.hypotheses_hold);
  EXPECT_LE(*cert.bound, 1e-13);
}

TEST(NewtonCertificate, DeltaTooLargeFails) {
  const auto b = get_benchmark("switched-integrator");
  const V s = vec({1.0});
  // delta = 0.5 > r / gamma = 0.1
  const auto cert = newton_certificate(b.problem, s, vec({0.0}), vec({0.5}), 0.1);
  EXPECT_FALSE(cert.hypotheses_hold);
  EXPECT_FALSE(cert.bound.has_value());
}

TEST(NewtonCertificate, StrongNonlinearityFails) {
  const auto p = riccati(100.0);
  const auto cert = newton_certificate(p, V(0), vec({0.0}), vec({0.0}), 0.009);
  EXPECT_GE(cert.epsilon * cert.gamma, 1.0);
  EXPECT_FALSE(cert.hypotheses_hold);
  EXPECT_FALSE(cert.bound.has_value());
}

TEST(NewtonCertificate, BoundHoldsWheneverHypothesesHold) {
  const auto b = get_benchmark("stacked-pair");
  ShootingOptions tight;
  tight.tol_res = 1e-13;
  const auto sol = solve_boundary(b.problem, b.default_schedule, vec({0.0, 0.0}), tight);
  CertificateOptions copts;
  copts.shooting = tight;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int held = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double scale = std::pow(10.0, -3.0 + 3.0 * (u(rng) + 1) / 2);
    const V offset = scale * vec({u(rng), u(rng)});
    const double r = 5 * scale;
    copts.seed = static_cast<std::uint64_t>(trial + 1);
    const auto cert = newton_certificate(b.problem, b.default_schedule, sol.theta, offset, r, copts);
    if (!cert.hypotheses_hold) continue;
    ++held;
    const auto from = solve_boundary(b.problem, b.default_schedule, cert.theta_start, tight);
    ASSERT_TRUE(from.converged);
    EXPECT_LE(inf_norm(V(from.theta - cert.theta_start)), *cert.bound * (1 + 1e-6));
  }
  EXPECT_GT(held, 10);
}

TEST(NewtonCertificate, Errors) {
  const auto b = get_benchmark("switched-integrator");
  EXPECT_THROW(newton_certificate(b.problem, vec({1.0}), vec({0.0}), vec({0.0}), 0.0), Error);
  EXPECT_THROW(newton_certificate(b.problem, vec({1.0}), vec({0.0}), vec({0.0, 1.0}), 0.1),
               DimensionMismatch);
  const auto f = get_benchmark("double-integrator-target", {{"free_terminal", 1.0}});
  EXPECT_THROW(newton_certificate(f.problem, vec({1.0}), V(0), V(0), 0.1), DimensionMismatch);
}
