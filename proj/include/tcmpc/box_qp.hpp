#pragma once

#include <Eigen/Dense>

namespace tcmpc {

struct BoxQpResult {
  Eigen::VectorXd x;
  /// free(i) is true when x(i) is not held at a bound by the gradient.
  Eigen::Array<bool, Eigen::Dynamic, 1> free;
  int iterations = 0;
};

/// Minimizes 0.5 x^T H x + g^T x over lower <= x <= upper for symmetric
/// positive definite H (projected Newton with an Armijo search along the
/// projection arc). `start` is clamped into the box before iterating.
BoxQpResult solve_box_qp(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient,
                         const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                         const Eigen::VectorXd& start);

}  // namespace tcmpc
