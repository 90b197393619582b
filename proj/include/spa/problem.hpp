#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spa/types.hpp"

namespace spa {

// Index sets of the state. I holds the components fixed at t = 0, E those
// fixed at t = T; J and F are their complements. Stored 0-based and sorted;
// partition_indices() takes the 1-based sets used at every external boundary.
struct IndexPartition {
  Index n = 0;
  std::vector<Index> I;
  std::vector<Index> E;
  std::vector<Index> J;
  std::vector<Index> F;
};

namespace detail {

inline std::vector<Index> checked_index_set(const std::vector<int>& one_based,
                                            Index n, const char* name) {
  std::vector<Index> out;
  out.reserve(one_based.size());
  for (int k : one_based) {
    if (k < 1 || k > n) {
      std::ostringstream os;
      os << "index " << k << " in set " << name << " is outside {1.." << n << "}";
      throw IndexOutOfRange(os.str());
    }
    out.push_back(static_cast<Index>(k - 1));
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
    throw IndexOutOfRange(std::string("duplicate index in set ") + name);
  }
  return out;
}

inline std::vector<Index> complement(const std::vector<Index>& sorted, Index n) {
  std::vector<Index> out;
  auto it = sorted.begin();
  for (Index k = 0; k < n; ++k) {
    if (it != sorted.end() && *it == k) {
      ++it;
    } else {
      out.push_back(k);
    }
  }
  return out;
}

}  // namespace detail

inline IndexPartition partition_indices(const std::vector<int>& I,
                                        const std::vector<int>& E, Index n) {
  if (n < 1) throw DimensionMismatch("state dimension must be positive");
  IndexPartition part;
  part.n = n;
  part.I = detail::checked_index_set(I, n, "I");
  part.E = detail::checked_index_set(E, n, "E");
  if (static_cast<Index>(part.I.size() + part.E.size()) != n) {
    std::ostringstream os;
    os << "|I| + |E| = " << part.I.size() + part.E.size() << " but n = " << n;
    throw DimensionMismatch(os.str());
  }
  part.J = detail::complement(part.I, n);
  part.F = detail::complement(part.E, n);
  return part;
}

inline std::vector<int> to_one_based(const std::vector<Index>& zero_based) {
  std::vector<int> out;
  out.reserve(zero_based.size());
  for (Index k : zero_based) out.push_back(static_cast<int>(k + 1));
  return out;
}

// One phase F_i(x, t) of the switched dynamics together with its state Jacobian.
template <typename Scalar>
struct PhaseDynamics {
  using Eval = std::function<Vector<Scalar>(const Vector<Scalar>&, Scalar)>;
  using Jacobian = std::function<Matrix<Scalar>(const Vector<Scalar>&, Scalar)>;

  Eval eval;
  Jacobian jacobian;
  int label = 0;
  bool jacobian_approximate = false;
};

// Central-difference Jacobian of `eval`, step 1e-6 * max(1, |x_k|) per column.
template <typename Scalar>
Matrix<Scalar> fd_jacobian(const typename PhaseDynamics<Scalar>::Eval& eval,
                           const Vector<Scalar>& x, Scalar t) {
  using std::abs;
  using std::max;
  const Index n = x.size();
  Matrix<Scalar> jac(n, n);
  Vector<Scalar> xp = x;
  Vector<Scalar> xm = x;
  for (Index k = 0; k < n; ++k) {
    const Scalar h = Scalar(1e-6) * max(Scalar(1), abs(x(k)));
    xp(k) = x(k) + h;
    xm(k) = x(k) - h;
    jac.col(k) = (eval(xp, t) - eval(xm, t)) / (xp(k) - xm(k));
    xp(k) = x(k);
    xm(k) = x(k);
  }
  return jac;
}

// Builds a phase whose Jacobian comes from fd_jacobian. Marked approximate.
template <typename Scalar>
PhaseDynamics<Scalar> with_fd_jacobian(int label,
                                       typename PhaseDynamics<Scalar>::Eval eval) {
  PhaseDynamics<Scalar> phase;
  phase.label = label;
  phase.jacobian_approximate = true;
  phase.jacobian = [eval](const Vector<Scalar>& x, Scalar t) {
    return fd_jacobian<Scalar>(eval, x, t);
  };
  phase.eval = std::move(eval);
  return phase;
}

template <typename Scalar>
struct ProblemDef {
  using Objective = std::function<Scalar(const Vector<Scalar>&)>;
  using ObjectiveGradient = std::function<RowVector<Scalar>(const Vector<Scalar>&)>;

  Scalar horizon = Scalar(1);
  IndexPartition partition;
  Vector<Scalar> b_I;  // ordered like partition.I
  Vector<Scalar> b_E;  // ordered like partition.E
  std::vector<PhaseDynamics<Scalar>> phases;
  Objective objective;
  ObjectiveGradient objective_gradient;

  Index n() const { return partition.n; }
  std::size_t num_phases() const { return phases.size(); }
  std::size_t num_switches() const { return phases.empty() ? 0 : phases.size() - 1; }
};

// Interior switch times s_1 < ... < s_{N-1}; s_0 = 0 and s_N = T are implicit.
template <typename Scalar>
using SwitchSchedule = Vector<Scalar>;

template <typename Scalar>
Scalar default_eps_sep(Scalar horizon) {
  return Scalar(1e-8) * horizon;
}

// Throws InvalidSchedule unless 0 < s_1 < ... < s_m < T with every gap at
// least eps_sep. Gaps are compared with a slack of 1e-14 * T so that schedules
// produced by projection (gaps equal to eps_sep up to rounding) are accepted.
template <typename Scalar>
void validate_schedule(Scalar horizon, const SwitchSchedule<Scalar>& s,
                       Scalar eps_sep) {
  if (!(horizon > Scalar(0)) || !std::isfinite(static_cast<double>(horizon))) {
    throw InvalidSchedule("horizon must be positive and finite");
  }
  const Scalar slack = Scalar(1e-14) * horizon;
  const Scalar min_gap = std::max(eps_sep - slack, Scalar(0));
  Scalar prev = Scalar(0);
  for (Index i = 0; i <= s.size(); ++i) {
    const Scalar next = i < s.size() ? s(i) : horizon;
    if (!std::isfinite(static_cast<double>(next))) {
      throw InvalidSchedule("switch time is not finite");
    }
    const Scalar gap = next - prev;
    if (!(gap > Scalar(0)) || gap < min_gap) {
      std::ostringstream os;
      os << "switch schedule violates ordering at position " << i + 1
         << " (gap " << static_cast<double>(gap) << ", required "
         << static_cast<double>(eps_sep) << ")";
      throw InvalidSchedule(os.str());
    }
    prev = next;
  }
}

template <typename Scalar>
void validate_schedule(const ProblemDef<Scalar>& p, const SwitchSchedule<Scalar>& s,
                       Scalar eps_sep) {
  if (static_cast<std::size_t>(s.size()) != p.num_switches()) {
    std::ostringstream os;
    os << "schedule has " << s.size() << " switch times, problem has "
       << p.num_phases() << " phases";
    throw InvalidSchedule(os.str());
  }
  validate_schedule(p.horizon, s, eps_sep);
}

template <typename Scalar>
void validate_schedule(const ProblemDef<Scalar>& p, const SwitchSchedule<Scalar>& s) {
  validate_schedule(p, s, default_eps_sep(p.horizon));
}

struct ValidationFinding {
  std::string check;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;
  std::vector<std::string> notes;

  bool ok() const { return findings.empty(); }
  bool flags(const std::string& check) const {
    return std::any_of(findings.begin(), findings.end(),
                       [&](const ValidationFinding& f) { return f.check == check; });
  }
};

struct ValidationOptions {
  int samples = 20;
  std::uint64_t seed = 1;
  // Sampling box for x; every component is drawn from [center - radius, center + radius].
  double center = 0.0;
  double radius = 1.0;
  double fd_tol = 1e-5;
};

template <typename Scalar>
ValidationReport validate_problem(const ProblemDef<Scalar>& p,
                                  const ValidationOptions& opts = {}) {
  ValidationReport report;
  auto add = [&](std::string check, std::string message) {
    report.findings.push_back({std::move(check), std::move(message)});
  };

  const IndexPartition& part = p.partition;
  const Index n = part.n;
  if (!(p.horizon > Scalar(0)) || !std::isfinite(static_cast<double>(p.horizon))) {
    add("horizon", "horizon must be positive and finite");
  }
  if (n < 1 || static_cast<Index>(part.I.size() + part.E.size()) != n ||
      static_cast<Index>(part.J.size()) != n - static_cast<Index>(part.I.size()) ||
      static_cast<Index>(part.F.size()) != n - static_cast<Index>(part.E.size())) {
    add("partition", "index partition is inconsistent with the state dimension");
  }
  if (p.b_I.size() != static_cast<Index>(part.I.size())) {
    add("dimensions", "b_I has the wrong length");
  }
  if (p.b_E.size() != static_cast<Index>(part.E.size())) {
    add("dimensions", "b_E has the wrong length");
  }
  if (!p.b_I.allFinite() || !p.b_E.allFinite()) {
    add("boundary", "boundary data is not finite");
  }
  if (p.phases.empty()) add("phases", "at least one phase is required");
  for (std::size_t i = 0; i < p.phases.size(); ++i) {
    if (p.phases[i].label != static_cast<int>(i)) {
      add("ordering", "phase " + std::to_string(i) + " carries label " +
                          std::to_string(p.phases[i].label));
    }
    if (!p.phases[i].eval || !p.phases[i].jacobian) {
      add("phases", "phase " + std::to_string(i) + " is missing eval or jacobian");
    }
    if (p.phases[i].jacobian_approximate) {
      report.notes.push_back("phase " + std::to_string(i) +
                             ": jacobian is approximate (finite differences)");
    }
  }
  if (!p.objective || !p.objective_gradient) add("objective", "objective or gradient missing");
  if (!report.ok()) return report;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> ux(opts.center - opts.radius,
                                            opts.center + opts.radius);
  std::uniform_real_distribution<double> ut(0.0, static_cast<double>(p.horizon));
  auto sample_x = [&] {
    Vector<Scalar> x(n);
    for (Index k = 0; k < n; ++k) x(k) = Scalar(ux(rng));
    return x;
  };

  for (std::size_t i = 0; i < p.phases.size(); ++i) {
    const auto& phase = p.phases[i];
    double worst = 0.0;
    bool bad_shape = false;
    for (int k = 0; k < opts.samples; ++k) {
      const Vector<Scalar> x = sample_x();
      const Scalar t = Scalar(ut(rng));
      const Vector<Scalar> f = phase.eval(x, t);
      const Matrix<Scalar> jac = phase.jacobian(x, t);
      if (f.size() != n || jac.rows() != n || jac.cols() != n) {
        bad_shape = true;
        break;
      }
      if (!f.allFinite() || !jac.allFinite()) {
        add("finite", "phase " + std::to_string(i) + " produced non-finite values");
        break;
      }
      const Matrix<Scalar> fd = fd_jacobian<Scalar>(phase.eval, x, t);
      const double err = static_cast<double>(op_inf_norm(jac - fd));
      const double scale = std::max(1.0, static_cast<double>(op_inf_norm(jac)));
      worst = std::max(worst, err / scale);
    }
    if (bad_shape) {
      add("dimensions", "phase " + std::to_string(i) + " returns wrongly sized values");
    } else if (worst > opts.fd_tol) {
      std::ostringstream os;
      os << "phase " << i << " jacobian disagrees with finite differences (relative error "
         << worst << ")";
      add("jacobian", os.str());
    }
  }

  double worst = 0.0;
  for (int k = 0; k < opts.samples; ++k) {
    const Vector<Scalar> x = sample_x();
    const RowVector<Scalar> g = p.objective_gradient(x);
    if (g.size() != n) {
      add("dimensions", "objective gradient has the wrong length");
      return report;
    }
    RowVector<Scalar> fd(n);
    Vector<Scalar> xp = x;
    Vector<Scalar> xm = x;
    for (Index j = 0; j < n; ++j) {
      using std::abs;
      const Scalar h = Scalar(1e-6) * std::max(Scalar(1), Scalar(abs(x(j))));
      xp(j) = x(j) + h;
      xm(j) = x(j) - h;
      fd(j) = (p.objective(xp) - p.objective(xm)) / (xp(j) - xm(j));
      xp(j) = x(j);
      xm(j) = x(j);
    }
    const double err = static_cast<double>(inf_norm(g - fd));
    worst = std::max(worst, err / std::max(1.0, static_cast<double>(inf_norm(g))));
  }
  if (worst > opts.fd_tol) {
    std::ostringstream os;
    os << "objective gradient disagrees with finite differences (relative error " << worst
       << ")";
    add("objective_gradient", os.str());
  }
  return report;
}

}  // namespace spa
