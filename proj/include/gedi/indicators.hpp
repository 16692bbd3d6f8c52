#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "gedi/kernel.hpp"
#include "gedi/lsq.hpp"

namespace gedi {

enum class Task { Regression, Classification };

/// Result of a generalized disparate impact evaluation. The indicator value
/// is the L1 norm of the least-squares coefficients on the centered kernel.
struct GediResult {
  double value = 0.0;            // |d*| = ||alpha_tilde||_1
  Eigen::VectorXd alpha_tilde;   // solution of the centered normal equations
  double d_star_abs = 0.0;       // alias of value
  double residual_mse = 0.0;     // (1/n) || F~ a - y~ ||^2
  Eigen::VectorXd per_basis;     // |alpha_tilde_j|
};

GediResult gedi(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                const KernelSpec& spec, double rtol = 1e-9);

/// Same evaluation against a pre-built kernel (training loops reuse it).
GediResult gedi(const KernelMatrix& km, const Eigen::VectorXd& y,
                double rtol = 1e-9);

/// Same evaluation against a pre-materialized coefficient map.
GediResult gedi(const CoefficientMap& map, const KernelMatrix& km,
                const Eigen::VectorXd& y);

/// Degree-1 closed form |cov(x, y) / var(x)| with population moments.
/// Equals gedi(x, y, poly:1).
double gedi_v1(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Disparate impact over discrete groups.
struct DidiResult {
  double value = 0.0;
  // (group value, deviation) sorted by group value; value is their sum.
  std::vector<std::pair<double, double>> per_group;
  int effective_groups = 0;
};

/// Regression form: sum over groups of |mean(y | x=v) - mean(y)|.
DidiResult didi_regression(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Classification form: sum over classes u and groups v of
/// |P(y=u | x=v) - P(y=u)|. For binary x and y this is exactly twice
/// gedi_v1(x, y).
DidiResult didi_classification(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Quantile-discretizes x into n_bins groups (edges at quantiles j/n_bins,
/// linear-interpolation quantiles; tied edges collapse bins), then delegates
/// to the regression or classification form. Groups are reported as bin
/// indices after collapsing.
DidiResult didi_binned(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       int n_bins, Task task);

/// The scalar least-squares minimizer of (1/n)||r*std(a) - std(b)||^2 over
/// standardized vectors; equals the sample Pearson correlation coefficient.
double pearson_via_least_squares(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

namespace detail {
/// Linear-interpolation empirical quantile of sorted data, p in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double p);
}  // namespace detail

}  // namespace gedi
