#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spa {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Costates are row vectors throughout.
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class InvalidSchedule : public Error {
 public:
  using Error::Error;
};

class InfeasiblePolytope : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  NonFiniteState(const std::string& what, std::size_t node)
      : Error(what), node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

class SingularMatrix : public Error {
 public:
  SingularMatrix(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class NotANode : public Error {
 public:
  using Error::Error;
};

class ShootingFailure : public Error {
 public:
  using Error::Error;
};

class UnknownBenchmark : public Error {
 public:
  using Error::Error;
};

class InvalidOverride : public Error {
 public:
  using Error::Error;
};

class NoReference : public Error {
 public:
  using Error::Error;
};

// Max-abs norm of a vector (0 for empty).
template <typename Derived>
auto inf_norm(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.size() == 0) return Scalar(0);
  return v.cwiseAbs().maxCoeff();
}

// Operator norm induced by the max-abs vector norm (max row sum).
template <typename Derived>
auto op_inf_norm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return Scalar(0);
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

}  // namespace spa
