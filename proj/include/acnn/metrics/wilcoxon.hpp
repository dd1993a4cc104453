#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "acnn/core/error.hpp"

namespace acnn {

/// Midranks (1-based) of the pooled sample a ++ b.
inline std::vector<double> pooled_midranks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return all[i] < all[j]; });
  std::vector<double> rank(all.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && all[order[j + 1]] == all[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  return rank;
}

namespace detail {

inline void check_samples(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorCategory::invalid_argument, "wilcoxon: both samples must be nonempty");
  // +-inf ranks fine (PSNR of an exact slice); NaN has no rank
  for (double v : a) require(!std::isnan(v), ErrorCategory::numeric, "wilcoxon: NaN sample");
  for (double v : b) require(!std::isnan(v), ErrorCategory::numeric, "wilcoxon: NaN sample");
}

inline bool all_identical(std::span<const double> a, std::span<const double> b) {
  const double x = a[0];
  return std::all_of(a.begin(), a.end(), [x](double v) { return v == x; }) &&
         std::all_of(b.begin(), b.end(), [x](double v) { return v == x; });
}

inline double clamp_p(double p) { return std::clamp(p, std::numeric_limits<double>::min(), 1.0); }

}  // namespace detail

/// Two-sided p-value from the exact permutation null of the rank sum,
/// conditional on the observed midranks.
inline double wilcoxon_exact(std::span<const double> a, std::span<const double> b) {
  detail::check_samples(a, b);
  if (detail::all_identical(a, b)) return 1.0;
  const std::size_t n1 = a.size(), n = a.size() + b.size();
  require(n <= 24, ErrorCategory::invalid_argument, "wilcoxon_exact: pooled size above 24");
  const auto rank = pooled_midranks(a, b);
  const double expected = static_cast<double>(n1) * static_cast<double>(n + 1) / 2.0;
  double w = 0.0;
  for (std::size_t i = 0; i < n1; ++i) w += rank[i];
  const double observed = std::abs(w - expected) - 1e-9;

  // Walk all n1-subsets of the pooled positions.
  std::vector<std::size_t> pick(n1);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  std::size_t total = 0, extreme = 0;
  while (true) {
    double s = 0.0;
    for (auto i : pick) s += rank[i];
    ++total;
    if (std::abs(s - expected) >= observed) ++extreme;
    std::size_t k = n1;
    while (k > 0 && pick[k - 1] == n - n1 + k - 1) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t j = k; j < n1; ++j) pick[j] = pick[j - 1] + 1;
  }
  return detail::clamp_p(static_cast<double>(extreme) / static_cast<double>(total));
}

/// Normal approximation with tie-corrected variance and continuity correction.
inline double wilcoxon_normal(std::span<const double> a, std::span<const double> b) {
  detail::check_samples(a, b);
  if (detail::all_identical(a, b)) return 1.0;
  const auto rank = pooled_midranks(a, b);
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size()), n = n1 + n2;
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w += rank[i];
  std::vector<double> sorted = rank;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(w - n1 * (n + 1.0) / 2.0) - 0.5) / std::sqrt(var);
  return detail::clamp_p(std::erfc(z / std::sqrt(2.0)));
}

/// Two-sided rank-sum p-value: exact for pooled size <= 12, normal approximation above.
inline double wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  return a.size() + b.size() <= 12 ? wilcoxon_exact(a, b) : wilcoxon_normal(a, b);
}

}  // namespace acnn
