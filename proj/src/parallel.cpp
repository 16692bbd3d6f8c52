#include "gedi/parallel.hpp"

namespace gedi::par {

namespace serial_ref {

GroupStats group_accumulate(std::span<const int> ids, std::span<const double> y,
                            int n_groups) {
  GroupStats st;
  st.sum.assign(static_cast<std::size_t>(n_groups), 0.0);
  st.count.assign(static_cast<std::size_t>(n_groups), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    st.sum[static_cast<std::size_t>(ids[i])] += y[i];
    st.count[static_cast<std::size_t>(ids[i])] += 1;
  }
  return st;
}

}  // namespace serial_ref

GroupStats group_accumulate(std::span<const int> ids, std::span<const double> y,
                            int n_groups) {
  const auto n = static_cast<std::ptrdiff_t>(ids.size());
  const std::ptrdiff_t nb = (n + kBlock - 1) / kBlock;
  // Large group counts make per-block accumulators wasteful; fall back.
  if (nb <= 1 || n_groups > 64 || omp_in_parallel())
    return serial_ref::group_accumulate(ids, y, n_groups);

  const auto g = static_cast<std::size_t>(n_groups);
  std::vector<double> psum(static_cast<std::size_t>(nb) * g, 0.0);
  std::vector<std::ptrdiff_t> pcount(static_cast<std::size_t>(nb) * g, 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    double* bsum = psum.data() + static_cast<std::size_t>(b) * g;
    std::ptrdiff_t* bcount = pcount.data() + static_cast<std::size_t>(b) * g;
    const std::ptrdiff_t hi = std::min(n, (b + 1) * kBlock);
    for (std::ptrdiff_t i = b * kBlock; i < hi; ++i) {
      bsum[ids[i]] += y[i];
      bcount[ids[i]] += 1;
    }
  }

  GroupStats st;
  st.sum.assign(g, 0.0);
  st.count.assign(g, 0);
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    for (std::size_t j = 0; j < g; ++j) {
      st.sum[j] += psum[static_cast<std::size_t>(b) * g + j];
      st.count[j] += pcount[static_cast<std::size_t>(b) * g + j];
    }
  }
  return st;
}

}  // namespace gedi::par
