#include "gedi/lsq.hpp"

#include "gedi/parallel.hpp"

namespace gedi {

Eigen::VectorXd CoefficientMap::alpha(const Eigen::VectorXd& y) const {
  const auto n = static_cast<std::size_t>(Mt.rows());
  Eigen::VectorXd a(Mt.cols());
  for (Eigen::Index j = 0; j < Mt.cols(); ++j) {
    a[j] = par::dot({Mt.col(j).data(), n}, {y.data(), n});
  }
  return a;
}

Eigen::VectorXd CoefficientMap::apply_transpose(const Eigen::VectorXd& s) const {
  return Mt * s;
}

CoefficientMap coefficient_map(const KernelMatrix& km, double rtol) {
  rank_check(km, rtol);
  const Eigen::Index n = km.centered.rows();
  const Eigen::Index k = km.centered.cols();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(km.centered);
  // F~ P = Q R  =>  pinv(F~) = P R^-1 Q^T, so M^T = Q R^-T P^T.
  Eigen::MatrixXd q_thin = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  Eigen::MatrixXd r_top =
      qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  Eigen::MatrixXd rinv_t = r_top.transpose()
                               .triangularView<Eigen::Lower>()
                               .solve(Eigen::MatrixXd::Identity(k, k));
  CoefficientMap map;
  map.Mt = q_thin * rinv_t * qr.colsPermutation().transpose();
  return map;
}

}  // namespace gedi
