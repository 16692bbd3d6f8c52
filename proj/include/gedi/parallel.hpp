#pragma once

#include <omp.h>

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

// Data-parallel reduction kernels used throughout the library, plus the plain
// serial implementations they are tested and benchmarked against.
//
// The parallel versions accumulate fixed-size blocks independently and combine
// the per-block partials in block order, so the result is bitwise identical
// for any thread count (including one). The serial reference uses the naive
// left-to-right loop and may differ from the blocked result in the last ulps.

namespace gedi::par {

inline constexpr std::ptrdiff_t kBlock = 4096;

namespace serial {

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : sum(v) / static_cast<double>(v.size());
}

// Population covariance (1/n), two-pass.
inline double covariance(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a);
  const double mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size());
}

inline double variance(std::span<const double> v) { return covariance(v, v); }

}  // namespace serial

// Splits [0, n) into kBlock-sized chunks, evaluates `fn(lo, hi)` per chunk in
// parallel, and sums the partials sequentially in chunk order.
template <class BlockFn>
double blocked_reduce(std::ptrdiff_t n, BlockFn&& fn) {
  if (n <= 0) return 0.0;
  const std::ptrdiff_t nb = (n + kBlock - 1) / kBlock;
  if (nb == 1) return fn(std::ptrdiff_t{0}, n);
  std::vector<double> partial(static_cast<std::size_t>(nb));
  const bool nested = omp_in_parallel();
#pragma omp parallel for schedule(static) if (!nested)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    partial[static_cast<std::size_t>(b)] =
        fn(b * kBlock, std::min(n, (b + 1) * kBlock));
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

inline double sum(std::span<const double> v) {
  return blocked_reduce(static_cast<std::ptrdiff_t>(v.size()),
                        [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
                          double s = 0.0;
                          for (std::ptrdiff_t i = lo; i < hi; ++i) s += v[i];
                          return s;
                        });
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return blocked_reduce(static_cast<std::ptrdiff_t>(a.size()),
                        [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
                          double s = 0.0;
                          for (std::ptrdiff_t i = lo; i < hi; ++i)
                            s += a[i] * b[i];
                          return s;
                        });
}

inline double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : sum(v) / static_cast<double>(v.size());
}

inline double covariance(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a);
  const double mb = mean(b);
  const double s = blocked_reduce(
      static_cast<std::ptrdiff_t>(a.size()),
      [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
        double acc = 0.0;
        for (std::ptrdiff_t i = lo; i < hi; ++i)
          acc += (a[i] - ma) * (b[i] - mb);
        return acc;
      });
  return s / static_cast<double>(a.size());
}

inline double variance(std::span<const double> v) { return covariance(v, v); }

// Per-group sums and counts for small group cardinalities. Blocked like the
// scalar reductions: each block owns a local accumulator, blocks are combined
// in order, so results do not depend on the thread count.
struct GroupStats {
  std::vector<double> sum;
  std::vector<std::ptrdiff_t> count;
};

GroupStats group_accumulate(std::span<const int> ids, std::span<const double> y,
                            int n_groups);

namespace serial_ref {
GroupStats group_accumulate(std::span<const int> ids, std::span<const double> y,
                            int n_groups);
}

}  // namespace gedi::par
