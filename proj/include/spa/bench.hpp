#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spa/problem.hpp"
#include "spa/types.hpp"

namespace spa {

using BenchmarkParams = std::map<std::string, double>;

// Closed-form values of a benchmark at a given schedule.
template <typename Scalar>
struct ReferenceValues {
  Vector<Scalar> theta;
  Scalar objective = Scalar(0);
  Vector<Scalar> gradient;     // dC/ds
  Matrix<Scalar> dtheta_ds;    // |J| x (N-1)
  RowVector<Scalar> p0;
  RowVector<Scalar> pT;
  Vector<Scalar> xT;
};

template <typename Scalar>
struct FundamentalReference {
  Matrix<Scalar> phi;
  Matrix<Scalar> psi;
};

template <typename Scalar>
struct BenchmarkSpec {
  std::string name;
  ProblemDef<Scalar> problem;
  SwitchSchedule<Scalar> default_schedule;
  BenchmarkParams params;
  std::function<ReferenceValues<Scalar>(const SwitchSchedule<Scalar>&)> reference;
  // Fundamental matrices at time t, for benchmarks with constant linear dynamics.
  std::function<FundamentalReference<Scalar>(Scalar)> fundamental;
  std::string notes;
};

inline std::vector<std::string> benchmark_names() {
  return {"switched-integrator", "double-integrator-target", "lti-nilpotent", "stacked-pair"};
}

namespace detail {

inline BenchmarkParams apply_overrides(const std::string& name, BenchmarkParams defaults,
                                       const BenchmarkParams& overrides) {
  for (const auto& [key, value] : overrides) {
    auto it = defaults.find(key);
    if (it == defaults.end()) {
      throw InvalidOverride("benchmark " + name + " has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) {
      throw InvalidOverride("parameter '" + key + "' must be finite");
    }
    it->second = value;
  }
  if (defaults.at("T") <= 0.0) throw InvalidOverride("parameter 'T' must be positive");
  return defaults;
}

template <typename Scalar>
Vector<Scalar> vec(std::initializer_list<Scalar> values) {
  Vector<Scalar> v(static_cast<Index>(values.size()));
  Index i = 0;
  for (Scalar x : values) v(i++) = x;
  return v;
}

template <typename Scalar>
Matrix<Scalar> mat2(Scalar a, Scalar b, Scalar c, Scalar d) {
  Matrix<Scalar> m(2, 2);
  m << a, b, c, d;
  return m;
}

inline double flag(const BenchmarkParams& params, const char* key) {
  const double v = params.at(key);
  if (v != 0.0 && v != 1.0) {
    throw InvalidOverride(std::string("parameter '") + key + "' must be 0 or 1");
  }
  return v;
}

// x1' = u (u = +1, then -1), x2' = x1. x1(0) = b1, x2(T) = bE, C = x1(T).
template <typename Scalar>
BenchmarkSpec<Scalar> switched_integrator(const BenchmarkParams& params) {
  const Scalar T = Scalar(params.at("T"));
  const Scalar b1 = Scalar(params.at("b1"));
  const Scalar bE = Scalar(params.at("bE"));

  BenchmarkSpec<Scalar> spec;
  spec.name = "switched-integrator";
  spec.params = params;
  auto& p = spec.problem;
  p.horizon = T;
  p.partition = partition_indices({1}, {2}, 2);
  p.b_I = vec<Scalar>({b1});
  p.b_E = vec<Scalar>({bE});
  const Matrix<Scalar> jac = mat2<Scalar>(0, 0, 1, 0);
  for (int i = 0; i < 2; ++i) {
    const Scalar u = i == 0 ? Scalar(1) : Scalar(-1);
    PhaseDynamics<Scalar> ph;
    ph.label = i;
    ph.eval = [u](const Vector<Scalar>& x, Scalar) { return vec<Scalar>({u, x(0)}); };
    ph.jacobian = [jac](const Vector<Scalar>&, Scalar) { return jac; };
    p.phases.push_back(ph);
  }
  p.objective = [](const Vector<Scalar>& x) { return x(0); };
  p.objective_gradient = [](const Vector<Scalar>&) {
    RowVector<Scalar> g(2);
    g << 1, 0;
    return g;
  };
  spec.default_schedule = vec<Scalar>({T / 2});

  // x1 = b1 + t on [0, s], b1 + 2s - t after; x2(T) = theta + b1 T + 2sT - s^2 - T^2/2.
  spec.reference = [=](const SwitchSchedule<Scalar>& s) {
    const Scalar sw = s(0);
    ReferenceValues<Scalar> r;
    r.theta = vec<Scalar>({bE - b1 * T - 2 * sw * T + sw * sw + T * T / 2});
    const Scalar x1T = b1 + 2 * sw - T;
    r.xT = vec<Scalar>({x1T, bE});
    r.objective = x1T;
    r.gradient = vec<Scalar>({Scalar(2)});
    r.dtheta_ds = Matrix<Scalar>::Constant(1, 1, -2 * T + 2 * sw);
    r.p0 = RowVector<Scalar>(2);
    r.p0 << 1, 0;
    r.pT = r.p0;
    return r;
  };
  spec.notes =
      "Closed forms from elementary antiderivatives: C(s) = b1 + 2s - T, dC/ds = 2, "
      "theta(s) = bE - b1 T - 2sT + s^2 + T^2/2, costate p = (1, 0).";
  return spec;
}

// x1' = x2, x2' = +1 then -1. Default: x1(0) = b1, x2(T) = bE, C = (x1(T) - target)^2.
// With free_terminal = 1: x(0) = (b1, v0) and no terminal constraint.
template <typename Scalar>
BenchmarkSpec<Scalar> double_integrator_target(const BenchmarkParams& params) {
  const Scalar T = Scalar(params.at("T"));
  const Scalar b1 = Scalar(params.at("b1"));
  const Scalar bE = Scalar(params.at("bE"));
  const Scalar target = Scalar(params.at("target"));
  const Scalar v0 = Scalar(params.at("v0"));
  const bool free_terminal = flag(params, "free_terminal") == 1.0;

  BenchmarkSpec<Scalar> spec;
  spec.name = "double-integrator-target";
  spec.params = params;
  auto& p = spec.problem;
  p.horizon = T;
  if (free_terminal) {
    p.partition = partition_indices({1, 2}, {}, 2);
    p.b_I = vec<Scalar>({b1, v0});
    p.b_E = Vector<Scalar>(0);
  } else {
    p.partition = partition_indices({1}, {2}, 2);
    p.b_I = vec<Scalar>({b1});
    p.b_E = vec<Scalar>({bE});
  }
  const Matrix<Scalar> jac = mat2<Scalar>(0, 1, 0, 0);
  for (int i = 0; i < 2; ++i) {
    const Scalar u = i == 0 ? Scalar(1) : Scalar(-1);
    PhaseDynamics<Scalar> ph;
    ph.label = i;
    ph.eval = [u](const Vector<Scalar>& x, Scalar) { return vec<Scalar>({x(1), u}); };
    ph.jacobian = [jac](const Vector<Scalar>&, Scalar) { return jac; };
    p.phases.push_back(ph);
  }
  p.objective = [target](const Vector<Scalar>& x) {
    const Scalar d = x(0) - target;
    return d * d;
  };
  p.objective_gradient = [target](const Vector<Scalar>& x) {
    RowVector<Scalar> g(2);
    g << 2 * (x(0) - target), 0;
    return g;
  };
  spec.default_schedule = vec<Scalar>({T / 4});

  spec.reference = [=](const SwitchSchedule<Scalar>& s) {
    const Scalar sw = s(0);
    ReferenceValues<Scalar> r;
    Scalar x1T;
    Scalar x2T;
    if (free_terminal) {
      x1T = b1 + v0 * T + 2 * sw * T - sw * sw - T * T / 2;
      x2T = v0 + 2 * sw - T;
      r.theta = Vector<Scalar>(0);
      r.dtheta_ds = Matrix<Scalar>(0, 1);
    } else {
      x1T = b1 + bE * T + T * T / 2 - sw * sw;
      x2T = bE;
      r.theta = vec<Scalar>({bE + T - 2 * sw});
      r.dtheta_ds = Matrix<Scalar>::Constant(1, 1, Scalar(-2));
    }
    const Scalar c = 2 * (x1T - target);
    r.xT = vec<Scalar>({x1T, x2T});
    r.objective = (x1T - target) * (x1T - target);
    // p1 is constant; p2' = -p1 with p2(0) = 0, or p2(T) = 0 in the free case.
    r.p0 = RowVector<Scalar>(2);
    r.pT = RowVector<Scalar>(2);
    if (free_terminal) {
      r.p0 << c, c * T;
      r.pT << c, 0;
      r.gradient = vec<Scalar>({c * (2 * T - 2 * sw)});
    } else {
      r.p0 << c, 0;
      r.pT << c, -c * T;
      r.gradient = vec<Scalar>({-2 * c * sw});
    }
    return r;
  };
  spec.notes = free_terminal
                   ? "Free terminal state: x1(T) = b1 + v0 T + 2sT - s^2 - T^2/2, "
                     "dC/ds = 2(x1(T) - target)(2T - 2s)."
                   : "theta(s) = bE + T - 2s, x1(T) = b1 + bE T + T^2/2 - s^2, "
                     "C(s) = (x1(T) - target)^2, dC/ds = -4s(x1(T) - target).";
  return spec;
}

// x' = A x with A = [[0, 1], [0, 0]], x(0) = (b1, b2), C = x1(T). Single phase.
template <typename Scalar>
BenchmarkSpec<Scalar> lti_nilpotent(const BenchmarkParams& params) {
  const Scalar T = Scalar(params.at("T"));
  const Scalar b1 = Scalar(params.at("b1"));
  const Scalar b2 = Scalar(params.at("b2"));

  BenchmarkSpec<Scalar> spec;
  spec.name = "lti-nilpotent";
  spec.params = params;
  auto& p = spec.problem;
  p.horizon = T;
  p.partition = partition_indices({1, 2}, {}, 2);
  p.b_I = vec<Scalar>({b1, b2});
  p.b_E = Vector<Scalar>(0);
  const Matrix<Scalar> a = mat2<Scalar>(0, 1, 0, 0);
  PhaseDynamics<Scalar> ph;
  ph.label = 0;
  ph.eval = [a](const Vector<Scalar>& x, Scalar) { return Vector<Scalar>(a * x); };
  ph.jacobian = [a](const Vector<Scalar>&, Scalar) { return a; };
  p.phases.push_back(ph);
  p.objective = [](const Vector<Scalar>& x) { return x(0); };
  p.objective_gradient = [](const Vector<Scalar>&) {
    RowVector<Scalar> g(2);
    g << 1, 0;
    return g;
  };
  spec.default_schedule = Vector<Scalar>(0);
  spec.reference = [=](const SwitchSchedule<Scalar>&) {
    ReferenceValues<Scalar> r;
    r.theta = Vector<Scalar>(0);
    r.xT = vec<Scalar>({b1 + b2 * T, b2});
    r.objective = b1 + b2 * T;
    r.gradient = Vector<Scalar>(0);
    r.dtheta_ds = Matrix<Scalar>(0, 0);
    r.p0 = RowVector<Scalar>(2);
    r.p0 << 1, T;
    r.pT = RowVector<Scalar>(2);
    r.pT << 1, 0;
    return r;
  };
  spec.fundamental = [a](Scalar t) {
    const Matrix<Scalar> I = Matrix<Scalar>::Identity(2, 2);
    return FundamentalReference<Scalar>{I + a * t, I - a.transpose() * t};
  };
  spec.notes = "Nilpotent A: Phi(t) = I + A t, Psi(t) = I - A^T t.";
  return spec;
}

// Generalized state (y1, y2, q1, q2) pairing a pendulum-like state with its
// costate. Control u is +1, then -q2 (costate feedback), then -1:
//   y1' = y2, y2' = u - k sin y1, q1' = k q2 cos y1, q2' = -q1.
// y(0) = (b1, b2) and q(T) = (bq1, bq2) are prescribed; C = (y1(T) - target)^2 + y2(T)^2 / 2.
template <typename Scalar>
BenchmarkSpec<Scalar> stacked_pair(const BenchmarkParams& params) {
  const Scalar T = Scalar(params.at("T"));
  const Scalar k = Scalar(params.at("kappa"));
  const Scalar target = Scalar(params.at("target"));

  BenchmarkSpec<Scalar> spec;
  spec.name = "stacked-pair";
  spec.params = params;
  auto& p = spec.problem;
  p.horizon = T;
  p.partition = partition_indices({1, 2}, {3, 4}, 4);
  p.b_I = vec<Scalar>({Scalar(params.at("b1")), Scalar(params.at("b2"))});
  p.b_E = vec<Scalar>({Scalar(params.at("bq1")), Scalar(params.at("bq2"))});

  for (int i = 0; i < 3; ++i) {
    PhaseDynamics<Scalar> ph;
    ph.label = i;
    ph.eval = [i, k](const Vector<Scalar>& x, Scalar) {
      using std::cos;
      using std::sin;
      const Scalar u = i == 0 ? Scalar(1) : (i == 1 ? -x(3) : Scalar(-1));
      Vector<Scalar> f(4);
      f << x(1), u - k * sin(x(0)), k * x(3) * cos(x(0)), -x(2);
      return f;
    };
    ph.jacobian = [i, k](const Vector<Scalar>& x, Scalar) {
      using std::cos;
      using std::sin;
      Matrix<Scalar> j = Matrix<Scalar>::Zero(4, 4);
      j(0, 1) = 1;
      j(1, 0) = -k * cos(x(0));
      if (i == 1) j(1, 3) = -1;
      j(2, 0) = -k * x(3) * sin(x(0));
      j(2, 3) = k * cos(x(0));
      j(3, 2) = -1;
      return j;
    };
    p.phases.push_back(ph);
  }
  p.objective = [target](const Vector<Scalar>& x) {
    const Scalar d = x(0) - target;
    return d * d + x(1) * x(1) / 2;
  };
  p.objective_gradient = [target](const Vector<Scalar>& x) {
    RowVector<Scalar> g = RowVector<Scalar>::Zero(4);
    g(0) = 2 * (x(0) - target);
    g(1) = x(1);
    return g;
  };
  spec.default_schedule = vec<Scalar>({Scalar(0.3) * T, Scalar(0.7) * T});
  spec.notes = "No closed form; validated against the finite-difference oracle.";
  return spec;
}

}  // namespace detail

template <typename Scalar = double>
BenchmarkSpec<Scalar> get_benchmark(const std::string& name,
                                    const BenchmarkParams& overrides = {}) {
  if (name == "switched-integrator") {
    return detail::switched_integrator<Scalar>(
        detail::apply_overrides(name, {{"T", 2.0}, {"b1", 0.0}, {"bE", 1.0}}, overrides));
  }
  if (name == "double-integrator-target") {
    return detail::double_integrator_target<Scalar>(detail::apply_overrides(
        name,
        {{"T", 2.0}, {"b1", 0.0}, {"bE", 0.0}, {"target", 1.0}, {"v0", 0.0},
         {"free_terminal", 0.0}},
        overrides));
  }
  if (name == "lti-nilpotent") {
    return detail::lti_nilpotent<Scalar>(
        detail::apply_overrides(name, {{"T", 2.0}, {"b1", 1.0}, {"b2", 1.0}}, overrides));
  }
  if (name == "stacked-pair") {
    return detail::stacked_pair<Scalar>(detail::apply_overrides(
        name,
        {{"T", 2.0}, {"kappa", 0.5}, {"target", 1.0}, {"b1", 0.0}, {"b2", 0.0},
         {"bq1", 0.4}, {"bq2", -0.2}},
        overrides));
  }
  throw UnknownBenchmark("unknown benchmark '" + name + "'");
}

template <typename Scalar>
ReferenceValues<Scalar> reference_values(const BenchmarkSpec<Scalar>& spec,
                                         const SwitchSchedule<Scalar>& s) {
  if (!spec.reference) throw NoReference("benchmark " + spec.name + " has no closed form");
  validate_schedule(spec.problem, s, Scalar(0));
  return spec.reference(s);
}

}  // namespace spa
