#pragma once

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "spa/types.hpp"

namespace spa {

// Dense LU with partial pivoting plus a 1-norm condition estimate.
template <typename Scalar>
class SmallSolver {
 public:
  explicit SmallSolver(const Matrix<Scalar>& a) : rows_(a.rows()) {
    if (a.size() == 0) return;
    lu_.compute(a);
    const Scalar rc = lu_.rcond();
    condition_ = rc > Scalar(0) ? 1.0 / static_cast<double>(rc)
                                : std::numeric_limits<double>::infinity();
    if (!std::isfinite(condition_) || !a.allFinite()) {
      condition_ = std::numeric_limits<double>::infinity();
    }
  }

  double condition() const { return condition_; }

  void require_condition(double limit, const std::string& what) const {
    if (!(condition_ <= limit)) {
      std::ostringstream os;
      os << what << " is numerically singular (condition estimate " << condition_ << ")";
      throw SingularMatrix(os.str(), condition_);
    }
  }

  template <typename Rhs>
  Matrix<Scalar> solve(const Eigen::MatrixBase<Rhs>& b) const {
    if (b.rows() == 0) return Matrix<Scalar>::Zero(0, b.cols());
    return lu_.solve(b);
  }

  Matrix<Scalar> inverse() const {
    if (rows_ == 0) return Matrix<Scalar>(0, 0);
    return lu_.inverse();
  }

 private:
  Index rows_ = 0;
  Eigen::PartialPivLU<Matrix<Scalar>> lu_;
  double condition_ = 1.0;
};

inline constexpr double kConditionLimit = 1e12;

}  // namespace spa
