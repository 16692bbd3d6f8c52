// Times the serial reference implementations against the blocked OpenMP
// kernels and a few end-to-end operations at 1 vs N threads.
//
//   ./gedi_bench [--n 2000000] [--reps 5]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>

#include "gedi/dataset.hpp"
#include "gedi/indicators.hpp"
#include "gedi/parallel.hpp"
#include "gedi/projection.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double time_ms(int reps, const auto& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (ms < best) best = ms;
  }
  return best;
}

volatile double sink;  // keeps the optimizer honest

void row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %12.3f %12.3f %9.2fx\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  int n = 2'000'000;
  int reps = 5;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (!std::strcmp(argv[i], "--n")) n = std::stoi(argv[i + 1]);
    if (!std::strcmp(argv[i], "--reps")) reps = std::stoi(argv[i + 1]);
  }

  std::mt19937_64 eng(7);
  const auto unit = [&eng]() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
  Eigen::VectorXd a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = 2.0 * unit() - 1.0;
    b[i] = 4.0 * std::sin(a[i]) + a[i] * a[i] + unit();
  }
  const std::span<const double> sa{a.data(), static_cast<std::size_t>(n)};
  const std::span<const double> sb{b.data(), static_cast<std::size_t>(n)};

  const int threads = omp_get_max_threads();
  std::printf("n = %d, threads = %d, reps = %d (best-of)\n\n", n, threads, reps);
  std::printf("%-28s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms", "speedup");

  row("sum",
      time_ms(reps, [&] { sink = gedi::par::serial::sum(sa); }),
      time_ms(reps, [&] { sink = gedi::par::sum(sa); }));
  row("dot",
      time_ms(reps, [&] { sink = gedi::par::serial::dot(sa, sb); }),
      time_ms(reps, [&] { sink = gedi::par::dot(sa, sb); }));
  row("covariance",
      time_ms(reps, [&] { sink = gedi::par::serial::covariance(sa, sb); }),
      time_ms(reps, [&] { sink = gedi::par::covariance(sa, sb); }));

  {
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i % 8;
    row("group_accumulate (8 groups)",
        time_ms(reps, [&] { sink = gedi::par::serial_ref::group_accumulate(ids, sb, 8).sum[0]; }),
        time_ms(reps, [&] { sink = gedi::par::group_accumulate(ids, sb, 8).sum[0]; }));
  }

  // End-to-end operations: same code path, 1 thread vs all threads.
  const auto with_threads = [&](int t, const auto& fn) {
    return time_ms(reps, [&] {
      omp_set_num_threads(t);
      fn();
      omp_set_num_threads(threads);
    });
  };

  const gedi::KernelSpec k5 = gedi::KernelSpec::polynomial(5);
  row("build_kernel poly:5",
      with_threads(1, [&] { sink = gedi::build_kernel(a, k5).centered(0, 0); }),
      with_threads(threads, [&] { sink = gedi::build_kernel(a, k5).centered(0, 0); }));
  row("gedi poly:5",
      with_threads(1, [&] { sink = gedi::gedi(a, b, k5).value; }),
      with_threads(threads, [&] { sink = gedi::gedi(a, b, k5).value; }));
  row("didi_binned n=5",
      with_threads(1, [&] { sink = gedi::didi_binned(a, b, 5, gedi::Task::Regression).value; }),
      with_threads(threads,
                   [&] { sink = gedi::didi_binned(a, b, 5, gedi::Task::Regression).value; }));

  {
    const int np = std::min(n, 20000);
    const Eigen::VectorXd xs = a.head(np);
    const Eigen::VectorXd ys = b.head(np);
    gedi::ConstraintSpec cs;
    cs.mode = gedi::ConstraintMode::Coarse;
    cs.bounds = Eigen::VectorXd::Constant(1, 0.2);
    cs.kernel = gedi::KernelSpec::polynomial(3);
    cs.threshold_is_relative = true;
    row("project_regression coarse",
        with_threads(1, [&] { sink = gedi::project_regression(xs, ys, cs).objective; }),
        with_threads(threads, [&] { sink = gedi::project_regression(xs, ys, cs).objective; }));
  }

  return 0;
}
