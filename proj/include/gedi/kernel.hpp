#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "gedi/errors.hpp"

namespace gedi {

enum class KernelFamily { Polynomial, Fourier, Custom };

/// A named scalar basis function, usable only through the programmatic API.
struct BasisFunction {
  std::string name;
  std::function<double(double)> fn;
};

/// Basis family plus order k. The indicator is entirely determined by this
/// choice, so it is part of every result and report.
struct KernelSpec {
  KernelFamily family = KernelFamily::Polynomial;
  int order = 1;
  std::vector<BasisFunction> basis;  // Custom only; size must equal order

  static KernelSpec polynomial(int k);
  static KernelSpec fourier(int k);
  static KernelSpec custom(std::vector<BasisFunction> fns);

  /// Parses the CLI grammar `poly:<k>` / `fourier:<k>`.
  static KernelSpec parse(const std::string& text);

  std::string name() const;
  void validate() const;
};

/// Raw basis evaluations F and the centered matrix used by every solve.
struct KernelMatrix {
  Eigen::MatrixXd raw;       // n x k, column j = f_j(x)
  Eigen::MatrixXd centered;  // raw with column means removed
  Eigen::VectorXd col_means;
  KernelSpec spec;

  Eigen::Index rows() const { return raw.rows(); }
  int order() const { return static_cast<int>(raw.cols()); }
};

/// Evaluates the basis on x and centers each column.
/// Polynomial: column j is x^j (j = 1..k); there is no constant column, the
/// centering absorbs the intercept. Fourier: columns alternate sin(j*pi*xh),
/// cos(j*pi*xh) with xh = x rescaled to [-1, 1] by sample min/max, truncated
/// to k columns.
KernelMatrix build_kernel(const Eigen::VectorXd& x, const KernelSpec& spec);

/// Numerical rank of the centered matrix: singular values above
/// rtol * sigma_max.
int numerical_rank(const KernelMatrix& km, double rtol = 1e-9);

/// Throws RankDeficientKernel unless the centered matrix has full column
/// rank; returns the rank otherwise. Binary attributes with k >= 2 and
/// constant attributes fail here: the indicator is ill-defined for them.
int rank_check(const KernelMatrix& km, double rtol = 1e-9);

}  // namespace gedi
