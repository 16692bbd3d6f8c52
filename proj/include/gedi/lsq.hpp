#pragma once

#include <Eigen/Dense>

#include "gedi/kernel.hpp"

namespace gedi {

/// The linear map from targets to least-squares coefficients on the centered
/// kernel: alpha = M y with M = (F~^T F~)^-1 F~^T. Materialized from a
/// column-pivoted QR factorization of the centered matrix, never from an
/// explicit inverse. Because the columns of F~ are centered, M 1 = 0, so the
/// map is invariant to shifting y.
struct CoefficientMap {
  Eigen::MatrixXd Mt;  // n x k, column j holds row j of M

  Eigen::Index rows() const { return Mt.rows(); }
  int order() const { return static_cast<int>(Mt.cols()); }

  /// alpha = M y (one blocked dot per coefficient).
  Eigen::VectorXd alpha(const Eigen::VectorXd& y) const;

  /// M^T s, the gradient direction of alpha^T s with respect to y.
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& s) const;
};

/// Rank-checks the kernel, then materializes the coefficient map.
CoefficientMap coefficient_map(const KernelMatrix& km, double rtol = 1e-9);

}  // namespace gedi
