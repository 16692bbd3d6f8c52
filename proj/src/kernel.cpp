#include "gedi/kernel.hpp"

#include <cmath>
#include <numbers>

#include "gedi/parallel.hpp"

namespace gedi {

KernelSpec KernelSpec::polynomial(int k) {
  KernelSpec s;
  s.family = KernelFamily::Polynomial;
  s.order = k;
  s.validate();
  return s;
}

KernelSpec KernelSpec::fourier(int k) {
  KernelSpec s;
  s.family = KernelFamily::Fourier;
  s.order = k;
  s.validate();
  return s;
}

KernelSpec KernelSpec::custom(std::vector<BasisFunction> fns) {
  KernelSpec s;
  s.family = KernelFamily::Custom;
  s.order = static_cast<int>(fns.size());
  s.basis = std::move(fns);
  s.validate();
  return s;
}

KernelSpec KernelSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("kernel spec must look like poly:<k> or fourier:<k>, got '" +
                                text + "'");
  const std::string family = text.substr(0, colon);
  int k = 0;
  try {
    std::size_t used = 0;
    k = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw std::invalid_argument("kernel order must be an integer in '" + text + "'");
  }
  if (family == "poly") return polynomial(k);
  if (family == "fourier") return fourier(k);
  throw std::invalid_argument("unknown kernel family '" + family + "'");
}

std::string KernelSpec::name() const {
  switch (family) {
    case KernelFamily::Polynomial:
      return "poly:" + std::to_string(order);
    case KernelFamily::Fourier:
      return "fourier:" + std::to_string(order);
    case KernelFamily::Custom: {
      std::string s = "custom:[";
      for (std::size_t i = 0; i < basis.size(); ++i) {
        if (i) s += ',';
        s += basis[i].name;
      }
      return s + ']';
    }
  }
  return "?";
}

void KernelSpec::validate() const {
  if (order < 1) throw std::invalid_argument("kernel order must be >= 1");
  if (family == KernelFamily::Custom) {
    if (basis.empty() || static_cast<int>(basis.size()) != order)
      throw std::invalid_argument("custom kernel needs a non-empty basis list of length k");
    for (const auto& b : basis)
      if (!b.fn) throw std::invalid_argument("custom basis function '" + b.name + "' is empty");
  }
}

namespace {

void fill_polynomial(const Eigen::VectorXd& x, Eigen::MatrixXd& raw) {
  const Eigen::Index n = x.size();
  const Eigen::Index k = raw.cols();
  const bool nested = omp_in_parallel();
#pragma omp parallel for schedule(static) if (!nested && n > 2048)
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      p *= x[i];
      raw(i, j) = p;
    }
  }
}

void fill_fourier(const Eigen::VectorXd& x, Eigen::MatrixXd& raw) {
  const Eigen::Index n = x.size();
  const Eigen::Index k = raw.cols();
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  const double range = hi - lo;
  const bool nested = omp_in_parallel();
#pragma omp parallel for schedule(static) if (!nested && n > 2048)
  for (Eigen::Index i = 0; i < n; ++i) {
    // Constant samples map to 0; the zero-variance columns then fail the
    // rank check instead of producing NaNs here.
    const double xh = range > 0.0 ? 2.0 * (x[i] - lo) / range - 1.0 : 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double freq = static_cast<double>(j / 2 + 1) * std::numbers::pi * xh;
      raw(i, j) = (j % 2 == 0) ? std::sin(freq) : std::cos(freq);
    }
  }
}

}  // namespace

KernelMatrix build_kernel(const Eigen::VectorXd& x, const KernelSpec& spec) {
  spec.validate();
  const Eigen::Index n = x.size();
  if (n < 2) throw EmptyInput("need at least 2 samples to build a kernel, got " +
                              std::to_string(n));
  if (!x.allFinite()) throw NonFiniteInput("protected attribute contains non-finite values");

  KernelMatrix km;
  km.spec = spec;
  km.raw.resize(n, spec.order);

  switch (spec.family) {
    case KernelFamily::Polynomial:
      fill_polynomial(x, km.raw);
      break;
    case KernelFamily::Fourier:
      fill_fourier(x, km.raw);
      break;
    case KernelFamily::Custom:
      for (int j = 0; j < spec.order; ++j) {
        const auto& fn = spec.basis[static_cast<std::size_t>(j)].fn;
        for (Eigen::Index i = 0; i < n; ++i) km.raw(i, j) = fn(x[i]);
      }
      break;
  }
  if (!km.raw.allFinite())
    throw NonFiniteInput("kernel evaluation produced non-finite values");

  km.col_means.resize(spec.order);
  km.centered.resize(n, spec.order);
  for (int j = 0; j < spec.order; ++j) {
    const std::span<const double> col{km.raw.col(j).data(), static_cast<std::size_t>(n)};
    km.col_means[j] = par::mean(col);
  }
  const bool nested = omp_in_parallel();
#pragma omp parallel for schedule(static) if (!nested && n > 2048)
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < spec.order; ++j) km.centered(i, j) = km.raw(i, j) - km.col_means[j];
  return km;
}

int numerical_rank(const KernelMatrix& km, double rtol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(km.centered);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cutoff = rtol * sv[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank;
  return rank;
}

int rank_check(const KernelMatrix& km, double rtol) {
  const int rank = numerical_rank(km, rtol);
  if (rank < km.order())
    throw RankDeficientKernel("kernel " + km.spec.name() + " has numerical rank " +
                              std::to_string(rank) + " < " + std::to_string(km.order()) +
                              "; the indicator is ill-defined for this kernel/data pair");
  return rank;
}

}  // namespace gedi
