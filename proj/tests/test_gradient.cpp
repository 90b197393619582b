#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spa/bench.hpp"
#include "spa/gradient.hpp"

using namespace spa;
using V = Vector<double>;
using R = RowVector<double>;

namespace {

V vec(std::initializer_list<double> v) {
  V out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

V guess(const ProblemDef<double>& p) { return V::Zero(static_cast<Index>(p.partition.J.size())); }

}  // namespace

TEST(Hamiltonian, ZeroCostate) {
  const auto b = get_benchmark("stacked-pair");
  EXPECT_EQ(hamiltonian(b.problem, 1, vec({0.1, 0.2, 0.3, 0.4}), R::Zero(4).eval(), 0.7), 0.0);
}

TEST(Hamiltonian, DoubleIntegratorJump) {
  const auto b = get_benchmark("double-integrator-target");
  R pv(2);
  pv << 1.5, -0.75;
  const V x = vec({0.375, 1.5});
  const double h0 = hamiltonian(b.problem, 0, x, pv, 0.5);
  const double h1 = hamiltonian(b.problem, 1, x, pv, 0.5);
  EXPECT_DOUBLE_EQ(h0, 1.5 * 1.5 - 0.75);
  EXPECT_DOUBLE_EQ(h0 - h1, -1.5);
}

TEST(Hamiltonian, SwitchedIntegratorJump) {
  const auto b = get_benchmark("switched-integrator");
  R pv(2);
  pv << 1.0, 0.0;
  const V x = vec({1.0, 0.0});
  EXPECT_DOUBLE_EQ(hamiltonian(b.problem, 0, x, pv, 1.0) - hamiltonian(b.problem, 1, x, pv, 1.0),
                   2.0);
}

TEST(Evaluate, DoubleIntegratorExamples) {
  const auto b = get_benchmark("double-integrator-target");
  const auto a = evaluate(b.problem, vec({0.5}), guess(b.problem));
  ASSERT_TRUE(a.ok);
  EXPECT_NEAR(a.objective, 0.5625, 1e-10);
  EXPECT_NEAR(a.grad(0), -1.5, 1e-8);
  EXPECT_TRUE(a.costate_ok);
  const auto c = evaluate(b.problem, vec({1.0}), guess(b.problem));
  EXPECT_NEAR(c.objective, 0.0, 1e-12);
  EXPECT_NEAR(c.grad(0), 0.0, 1e-10);
}

TEST(Evaluate, SwitchedIntegratorExample) {
  const auto b = get_benchmark("switched-integrator");
  const auto a = evaluate(b.problem, vec({1.0}), guess(b.problem));
  EXPECT_NEAR(a.objective, 0.0, 1e-12);
  EXPECT_NEAR(a.grad(0), 2.0, 1e-10);
}

TEST(Evaluate, GradientIsTheHamiltonianJump) {
  const auto b = get_benchmark("stacked-pair");
  const auto rep = evaluate(b.problem, b.default_schedule, guess(b.problem));
  ASSERT_TRUE(rep.ok);
  ASSERT_EQ(rep.hamiltonians.size(), 2u);
  for (Index i = 0; i < 2; ++i) {
    const auto& h = rep.hamiltonians[static_cast<std::size_t>(i)];
    EXPECT_EQ(rep.grad(i), h.left - h.right);
  }
}

TEST(Evaluate, NonConvergenceWithholdsGradient) {
  const auto b = get_benchmark("stacked-pair");
  EvaluateOptions opts;
  opts.shooting.max_iter = 0;
  const auto rep = evaluate(b.problem, b.default_schedule, vec({3.0, 3.0}), opts);
  EXPECT_FALSE(rep.ok);
  EXPECT_FALSE(rep.costate.has_value());
  EXPECT_EQ(rep.grad.size(), 0);
}

TEST(Evaluate, RejectsUnorderedSchedule) {
  const auto b = get_benchmark("stacked-pair");
  EXPECT_THROW(evaluate(b.problem, vec({1.4, 0.6}), guess(b.problem)), InvalidSchedule);
}

TEST(FdOracle, ClosedFormExamples) {
  const auto di = get_benchmark("double-integrator-target");
  EXPECT_NEAR(fd_gradient_oracle(di.problem, vec({0.5}), guess(di.problem))(0), -1.5, 1e-7);
  const auto si = get_benchmark("switched-integrator");
  EXPECT_NEAR(fd_gradient_oracle(si.problem, vec({1.0}), guess(si.problem))(0), 2.0, 1e-8);
}

TEST(FdOracle, AgreesWithAnalyticOnRandomSchedules) {
  std::mt19937_64 rng(101);
  for (const auto& name : {"switched-integrator", "double-integrator-target", "stacked-pair"}) {
    const auto b = get_benchmark(name);
    for (int trial = 0; trial < 10; ++trial) {
      const V s = oracle::random_schedule(rng, static_cast<int>(b.problem.num_switches()),
                                          b.problem.horizon, 0.05, 0.05);
      const auto rep = evaluate(b.problem, s, guess(b.problem));
      ASSERT_TRUE(rep.ok);
      const V fd = fd_gradient_oracle(b.problem, s, rep.shooting.theta);
      EXPECT_LE(inf_norm(V(rep.grad - fd)), 1e-6 * std::max(1.0, inf_norm(rep.grad))) << name;
    }
  }
}

TEST(Gradient, IdenticalPhasesGiveZero) {
  auto b = get_benchmark("stacked-pair");
  b.problem.phases[2].eval = b.problem.phases[1].eval;
  b.problem.phases[2].jacobian = b.problem.phases[1].jacobian;
  const auto rep = evaluate(b.problem, b.default_schedule, guess(b.problem));
  ASSERT_TRUE(rep.ok);
  EXPECT_LE(std::abs(rep.grad(1)), 1e-10);
  EXPECT_GT(std::abs(rep.grad(0)), 1e-3);
  const V fd = fd_gradient_oracle(b.problem, b.default_schedule, rep.shooting.theta);
  EXPECT_LE(std::abs(fd(1)), 1e-6);
}

TEST(Gradient, ScalesWithObjectiveAndIgnoresConstants) {
  const auto base = get_benchmark("stacked-pair");
  const auto g0 = evaluate(base.problem, base.default_schedule, guess(base.problem)).grad;

  auto shifted = get_benchmark("stacked-pair");
  auto obj = shifted.problem.objective;
  shifted.problem.objective = [obj](const V& x) { return obj(x) + 10.0; };
  const auto g1 = evaluate(shifted.problem, shifted.default_schedule, guess(shifted.problem)).grad;
  EXPECT_EQ(g1, g0);

  auto scaled = get_benchmark("stacked-pair");
  auto o2 = scaled.problem.objective;
  auto d2 = scaled.problem.objective_gradient;
  scaled.problem.objective = [o2](const V& x) { return 3.0 * o2(x); };
  scaled.problem.objective_gradient = [d2](const V& x) { return R(3.0 * d2(x)); };
  const auto g2 = evaluate(scaled.problem, scaled.default_schedule, guess(scaled.problem)).grad;
  EXPECT_LE(inf_norm(V(g2 - 3.0 * g0)), 1e-12 * std::max(1.0, inf_norm(g0)));
}

TEST(ObjectiveValue, MatchesEvaluate) {
  const auto b = get_benchmark("stacked-pair");
  const auto val = objective_value(b.problem, b.default_schedule, guess(b.problem));
  const auto rep = evaluate(b.problem, b.default_schedule, guess(b.problem));
  ASSERT_TRUE(val.converged);
  EXPECT_NEAR(val.objective, rep.objective, 1e-12);
}
