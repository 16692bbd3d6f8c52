#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

// Deterministic, platform-independent draws for test data: mt19937_64 output
// is standardized, the transforms are spelled out.
namespace testutil {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }  // [0, 1)

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  double normal() {
    const double u1 = 1.0 - unit();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  Eigen::VectorXd uniform_vec(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  Eigen::VectorXd normal_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // Binary vector with both values guaranteed present.
  Eigen::VectorXd binary_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = unit() < 0.5 ? 0.0 : 1.0;
    v[0] = 0.0;
    v[n - 1] = 1.0;
    return v;
  }

 private:
  std::mt19937_64 eng_;
};

inline double pop_mean(const Eigen::VectorXd& v) { return v.mean(); }

inline double pop_cov(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return ((a.array() - a.mean()) * (b.array() - b.mean())).sum() /
         static_cast<double>(a.size());
}

inline double pop_var(const Eigen::VectorXd& v) { return pop_cov(v, v); }

}  // namespace testutil
