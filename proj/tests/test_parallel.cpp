#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <omp.h>

#include "gedi/parallel.hpp"
#include "test_util.hpp"

using namespace gedi;

TEST_CASE("blocked reductions match the serial reference") {
  testutil::Rng rng(1);
  for (const int n : {1, 5, 4096, 4097, 100000}) {
    const Eigen::VectorXd a = rng.uniform_vec(n, -2.0, 2.0);
    const Eigen::VectorXd b = rng.normal_vec(n);
    const std::span<const double> sa{a.data(), static_cast<std::size_t>(n)};
    const std::span<const double> sb{b.data(), static_cast<std::size_t>(n)};

    CHECK(par::sum(sa) == doctest::Approx(par::serial::sum(sa)).epsilon(1e-13));
    CHECK(par::dot(sa, sb) == doctest::Approx(par::serial::dot(sa, sb)).epsilon(1e-13));
    CHECK(par::covariance(sa, sb) ==
          doctest::Approx(par::serial::covariance(sa, sb)).epsilon(1e-12));
    CHECK(par::variance(sa) == doctest::Approx(par::serial::variance(sa)).epsilon(1e-12));
  }
}

TEST_CASE("blocked reductions are bitwise independent of the thread count") {
  testutil::Rng rng(2);
  const int n = 50000;
  const Eigen::VectorXd a = rng.uniform_vec(n, -1.0, 1.0);
  const Eigen::VectorXd b = rng.uniform_vec(n, -1.0, 1.0);
  const std::span<const double> sa{a.data(), static_cast<std::size_t>(n)};
  const std::span<const double> sb{b.data(), static_cast<std::size_t>(n)};

  const int max_threads = omp_get_max_threads();
  omp_set_num_threads(1);
  const double s1 = par::sum(sa);
  const double d1 = par::dot(sa, sb);
  const double c1 = par::covariance(sa, sb);
  omp_set_num_threads(max_threads);
  CHECK(par::sum(sa) == s1);
  CHECK(par::dot(sa, sb) == d1);
  CHECK(par::covariance(sa, sb) == c1);
}

TEST_CASE("group accumulation matches the serial reference") {
  testutil::Rng rng(3);
  const int n = 30000;
  const int groups = 7;
  std::vector<int> ids(n);
  Eigen::VectorXd y = rng.normal_vec(n);
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = rng.uniform_int(0, groups - 1);

  const std::span<const double> sy{y.data(), static_cast<std::size_t>(n)};
  const auto fast = par::group_accumulate(ids, sy, groups);
  const auto ref = par::serial_ref::group_accumulate(ids, sy, groups);
  for (int g = 0; g < groups; ++g) {
    CHECK(fast.count[static_cast<std::size_t>(g)] == ref.count[static_cast<std::size_t>(g)]);
    CHECK(fast.sum[static_cast<std::size_t>(g)] ==
          doctest::Approx(ref.sum[static_cast<std::size_t>(g)]).epsilon(1e-13));
  }

  // Thread-count independence, same contract as the scalar reductions.
  const int max_threads = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = par::group_accumulate(ids, sy, groups);
  omp_set_num_threads(max_threads);
  const auto many = par::group_accumulate(ids, sy, groups);
  for (int g = 0; g < groups; ++g)
    CHECK(one.sum[static_cast<std::size_t>(g)] == many.sum[static_cast<std::size_t>(g)]);
}
