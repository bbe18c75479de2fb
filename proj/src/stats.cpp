// SPDX-License-Identifier: Apache-2.0
#include "oric/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oric {

std::vector<double> mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo;
    while (hi + 1 < n && values[order[hi + 1]] == values[order[lo]]) ++hi;
    const double rank = (static_cast<double>(lo + 1) + static_cast<double>(hi + 1)) / 2.0;
    for (std::size_t k = lo; k <= hi; ++k) ranks[order[k]] = rank;
    lo = hi + 1;
  }
  return ranks;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double spearman(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 0.0;
  const auto ra = mid_ranks(a.first(n));
  const auto rb = mid_ranks(b.first(n));
  const double ma = mean(ra), mb = mean(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oric
