#include "gedi/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "gedi/parallel.hpp"

namespace gedi {

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void check_lengths(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size())
    throw LengthMismatch("x has " + std::to_string(x.size()) + " entries, y has " +
                         std::to_string(y.size()));
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NonFiniteInput(std::string(what) + " contains non-finite values");
}

// Maps each entry to the index of its value in the sorted unique list.
std::vector<int> factorize(const Eigen::VectorXd& v, std::vector<double>& levels) {
  levels.assign(v.data(), v.data() + v.size());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<int> ids(static_cast<std::size_t>(v.size()));
  const bool nested = omp_in_parallel();
#pragma omp parallel for schedule(static) if (!nested && v.size() > 4096)
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto it = std::lower_bound(levels.begin(), levels.end(), v[i]);
    ids[static_cast<std::size_t>(i)] = static_cast<int>(it - levels.begin());
  }
  return ids;
}

}  // namespace

GediResult gedi(const CoefficientMap& map, const KernelMatrix& km,
                const Eigen::VectorXd& y) {
  if (km.rows() != y.size())
    throw LengthMismatch("kernel has " + std::to_string(km.rows()) + " rows, y has " +
                         std::to_string(y.size()));
  check_finite(y, "y");

  GediResult res;
  res.alpha_tilde = map.alpha(y);
  res.per_basis = res.alpha_tilde.cwiseAbs();
  res.value = res.per_basis.sum();
  res.d_star_abs = res.value;

  const double y_mean = par::mean(as_span(y));
  Eigen::VectorXd resid = km.centered * res.alpha_tilde;
  resid.array() -= y.array() - y_mean;
  res.residual_mse = resid.squaredNorm() / static_cast<double>(y.size());
  return res;
}

GediResult gedi(const KernelMatrix& km, const Eigen::VectorXd& y, double rtol) {
  return gedi(coefficient_map(km, rtol), km, y);
}

GediResult gedi(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                const KernelSpec& spec, double rtol) {
  check_lengths(x, y);
  return gedi(build_kernel(x, spec), y, rtol);
}

double gedi_v1(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  check_lengths(x, y);
  check_finite(x, "x");
  check_finite(y, "y");
  const double var = par::variance(as_span(x));
  if (var <= 0.0) throw ZeroVariance("protected attribute is constant");
  return std::abs(par::covariance(as_span(x), as_span(y)) / var);
}

DidiResult didi_regression(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  check_lengths(x, y);
  check_finite(x, "x");
  check_finite(y, "y");

  std::vector<double> levels;
  const std::vector<int> ids = factorize(x, levels);
  const int n_groups = static_cast<int>(levels.size());
  if (n_groups < 2) throw SingleGroup("protected attribute has a single value");

  const auto st = par::group_accumulate(ids, as_span(y), n_groups);
  const double overall = par::mean(as_span(y));

  DidiResult res;
  res.effective_groups = n_groups;
  res.per_group.reserve(static_cast<std::size_t>(n_groups));
  for (int g = 0; g < n_groups; ++g) {
    const auto gs = static_cast<std::size_t>(g);
    const double dev = std::abs(st.sum[gs] / static_cast<double>(st.count[gs]) - overall);
    res.per_group.emplace_back(levels[gs], dev);
    res.value += dev;
  }
  return res;
}

DidiResult didi_classification(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  check_lengths(x, y);
  check_finite(x, "x");
  check_finite(y, "y");

  std::vector<double> group_levels, class_levels;
  const std::vector<int> gids = factorize(x, group_levels);
  const std::vector<int> cids = factorize(y, class_levels);
  const int n_groups = static_cast<int>(group_levels.size());
  const int n_classes = static_cast<int>(class_levels.size());
  if (n_groups < 2) throw SingleGroup("protected attribute has a single value");
  if (n_classes < 2) throw SingleClass("target has a single class");

  const auto n = static_cast<std::size_t>(x.size());
  std::vector<std::ptrdiff_t> joint(static_cast<std::size_t>(n_groups * n_classes), 0);
  std::vector<std::ptrdiff_t> per_class(static_cast<std::size_t>(n_classes), 0);
  std::vector<std::ptrdiff_t> per_grp(static_cast<std::size_t>(n_groups), 0);
  for (std::size_t i = 0; i < n; ++i) {
    joint[static_cast<std::size_t>(gids[i] * n_classes + cids[i])] += 1;
    per_class[static_cast<std::size_t>(cids[i])] += 1;
    per_grp[static_cast<std::size_t>(gids[i])] += 1;
  }

  DidiResult res;
  res.effective_groups = n_groups;
  res.per_group.reserve(static_cast<std::size_t>(n_groups));
  for (int g = 0; g < n_groups; ++g) {
    double dev = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      const double cond = static_cast<double>(joint[static_cast<std::size_t>(g * n_classes + c)]) /
                          static_cast<double>(per_grp[static_cast<std::size_t>(g)]);
      const double marginal =
          static_cast<double>(per_class[static_cast<std::size_t>(c)]) / static_cast<double>(n);
      dev += std::abs(cond - marginal);
    }
    res.per_group.emplace_back(group_levels[static_cast<std::size_t>(g)], dev);
    res.value += dev;
  }
  return res;
}

namespace detail {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const auto n = sorted.size();
  if (n == 0) return 0.0;
  const double h = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= n) return sorted.back();
  const double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

DidiResult didi_binned(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       int n_bins, Task task) {
  check_lengths(x, y);
  check_finite(x, "x");
  if (n_bins < 2) throw std::invalid_argument("n_bins must be >= 2");

  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(n_bins - 1));
  for (int j = 1; j < n_bins; ++j)
    edges.push_back(detail::quantile_sorted(sorted, static_cast<double>(j) /
                                                        static_cast<double>(n_bins)));
  // Tied quantiles collapse their bins.
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const auto n = static_cast<std::size_t>(x.size());
  std::vector<int> bin(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = std::lower_bound(edges.begin(), edges.end(), x[static_cast<Eigen::Index>(i)]);
    bin[i] = static_cast<int>(it - edges.begin());
  }

  // Relabel so only non-empty bins remain.
  const int raw_bins = static_cast<int>(edges.size()) + 1;
  std::vector<int> remap(static_cast<std::size_t>(raw_bins), -1);
  for (std::size_t i = 0; i < n; ++i) remap[static_cast<std::size_t>(bin[i])] = 0;
  int effective = 0;
  for (auto& r : remap)
    if (r == 0) r = effective++;
  if (effective < 2)
    throw DegenerateBinning("quantile binning produced " + std::to_string(effective) +
                            " non-empty bin(s)");

  Eigen::VectorXd groups(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    groups[static_cast<Eigen::Index>(i)] =
        static_cast<double>(remap[static_cast<std::size_t>(bin[i])]);

  DidiResult res = task == Task::Regression ? didi_regression(groups, y)
                                            : didi_classification(groups, y);
  res.effective_groups = effective;
  return res;
}

double pearson_via_least_squares(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  check_lengths(a, b);
  check_finite(a, "a");
  check_finite(b, "b");
  const double va = par::variance(as_span(a));
  const double vb = par::variance(as_span(b));
  if (va <= 0.0 || vb <= 0.0) throw ZeroVariance("pearson requires both variances > 0");

  const double ma = par::mean(as_span(a));
  const double mb = par::mean(as_span(b));
  Eigen::VectorXd u = (a.array() - ma) / std::sqrt(va);
  Eigen::VectorXd w = (b.array() - mb) / std::sqrt(vb);
  // One-dimensional least squares: r minimizing ||r u - w||^2.
  return par::dot(as_span(u), as_span(w)) / par::dot(as_span(u), as_span(u));
}

}  // namespace gedi
