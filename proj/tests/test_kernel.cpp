#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "gedi/kernel.hpp"
#include "test_util.hpp"

using namespace gedi;

TEST_CASE("polynomial columns are elementwise powers, no constant column") {
  Eigen::VectorXd x(3);
  x << 1, 2, 3;
  const KernelMatrix km = build_kernel(x, KernelSpec::polynomial(2));
  Eigen::VectorXd c0(3), c1(3);
  c0 << 1, 2, 3;
  c1 << 1, 4, 9;
  CHECK(km.raw.col(0).isApprox(c0));
  CHECK(km.raw.col(1).isApprox(c1));
}

TEST_CASE("centering subtracts the column mean") {
  Eigen::VectorXd x(4);
  x << 0, 0, 1, 1;
  const KernelMatrix km = build_kernel(x, KernelSpec::polynomial(1));
  Eigen::VectorXd want(4);
  want << -0.5, -0.5, 0.5, 0.5;
  CHECK(km.centered.col(0).isApprox(want));
  CHECK(km.col_means[0] == doctest::Approx(0.5));
}

TEST_CASE("order-1 centered column equals x - mean(x) exactly") {
  testutil::Rng rng(4);
  const Eigen::VectorXd x = rng.uniform_vec(37, -3.0, 5.0);
  const KernelMatrix km = build_kernel(x, KernelSpec::polynomial(1));
  const double mean = km.col_means[0];
  for (int i = 0; i < 37; ++i) CHECK(km.centered(i, 0) == x[i] - mean);
}

TEST_CASE("centered columns have near-zero means") {
  testutil::Rng rng(5);
  const Eigen::VectorXd x = rng.uniform_vec(200, -2.0, 2.0);
  const KernelMatrix km = build_kernel(x, KernelSpec::polynomial(5));
  for (int j = 0; j < 5; ++j) {
    const double scale = km.centered.col(j).cwiseAbs().maxCoeff();
    CHECK(std::abs(km.centered.col(j).mean()) <= 1e-12 * scale);
  }
}

TEST_CASE("fourier columns alternate sin/cos over x rescaled to [-1, 1]") {
  Eigen::VectorXd x(5);
  x << 0, 1, 2, 3, 4;
  const KernelMatrix km = build_kernel(x, KernelSpec::fourier(3));
  REQUIRE(km.raw.cols() == 3);
  for (int i = 0; i < 5; ++i) {
    const double xh = 2.0 * x[i] / 4.0 - 1.0;
    CHECK(km.raw(i, 0) == doctest::Approx(std::sin(std::numbers::pi * xh)));
    CHECK(km.raw(i, 1) == doctest::Approx(std::cos(std::numbers::pi * xh)));
    CHECK(km.raw(i, 2) == doctest::Approx(std::sin(2.0 * std::numbers::pi * xh)));
  }
}

TEST_CASE("custom basis evaluates the given functions") {
  Eigen::VectorXd x(3);
  x << 1, 2, 3;
  const KernelSpec spec = KernelSpec::custom({{"sq", [](double v) { return v * v; }}});
  const KernelMatrix km = build_kernel(x, spec);
  CHECK(km.raw(2, 0) == 9.0);
  CHECK(spec.name() == "custom:[sq]");
}

TEST_CASE("rank of a polynomial kernel on distinct points is full") {
  testutil::Rng rng(6);
  const Eigen::VectorXd x = rng.uniform_vec(500, -std::numbers::pi, std::numbers::pi);
  const KernelMatrix km = build_kernel(x, KernelSpec::polynomial(3));
  CHECK(rank_check(km) == 3);

  // Vandermonde on distinct nodes: full rank for any order <= n-1.
  Eigen::VectorXd small(6);
  small << -2.5, -1, 0, 0.5, 1.5, 3;
  for (int k = 1; k <= 5; ++k)
    CHECK(rank_check(build_kernel(small, KernelSpec::polynomial(k))) == k);
}

TEST_CASE("binary attributes are rank deficient beyond order 1") {
  Eigen::VectorXd x(4);
  x << 0, 1, 0, 1;  // x^2 = x
  CHECK(rank_check(build_kernel(x, KernelSpec::polynomial(1))) == 1);
  CHECK_THROWS_AS(rank_check(build_kernel(x, KernelSpec::polynomial(2))), RankDeficientKernel);
}

TEST_CASE("constant attributes are rank deficient") {
  Eigen::VectorXd x = Eigen::VectorXd::Constant(8, 3.25);
  CHECK_THROWS_AS(rank_check(build_kernel(x, KernelSpec::polynomial(1))), RankDeficientKernel);
  CHECK(numerical_rank(build_kernel(x, KernelSpec::polynomial(1))) == 0);
}

TEST_CASE("nested polynomial spans: F(k) columns lie in the span of F(k')") {
  testutil::Rng rng(7);
  const Eigen::VectorXd x = rng.uniform_vec(150, -1.5, 1.5);
  const KernelMatrix lo = build_kernel(x, KernelSpec::polynomial(2));
  const KernelMatrix hi = build_kernel(x, KernelSpec::polynomial(5));
  for (int j = 0; j < lo.order(); ++j) {
    const Eigen::VectorXd col = lo.centered.col(j);
    const Eigen::VectorXd fitted = hi.centered * hi.centered.colPivHouseholderQr().solve(col);
    CHECK((col - fitted).norm() <= 1e-8 * std::max(1.0, col.norm()));
  }
}

TEST_CASE("input validation") {
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK_THROWS_AS(build_kernel(one, KernelSpec::polynomial(1)), EmptyInput);

  Eigen::VectorXd bad(3);
  bad << 1.0, std::nan(""), 2.0;
  CHECK_THROWS_AS(build_kernel(bad, KernelSpec::polynomial(1)), NonFiniteInput);

  CHECK_THROWS_AS(KernelSpec::polynomial(0), std::invalid_argument);
}

TEST_CASE("kernel spec grammar") {
  CHECK(KernelSpec::parse("poly:3").order == 3);
  CHECK(KernelSpec::parse("poly:3").family == KernelFamily::Polynomial);
  CHECK(KernelSpec::parse("fourier:4").family == KernelFamily::Fourier);
  CHECK(KernelSpec::parse("poly:3").name() == "poly:3");
  CHECK_THROWS_AS(KernelSpec::parse("poly"), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::parse("poly:x"), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::parse("rbf:2"), std::invalid_argument);
}
