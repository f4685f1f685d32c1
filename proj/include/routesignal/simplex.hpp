#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

namespace routesignal {

/**
 * Euclidean projection of `v` onto {y >= 0, sum(y) = mass} by sort and threshold.
 * mass == 0 yields the zero vector.
 */
inline std::vector<double> project_to_simplex(std::span<const double> v, double mass) {
  const std::size_t n = v.size();
  std::vector<double> out(n, 0.0);
  if (n == 0 || mass <= 0.0) return out;

  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double running = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    running += sorted[j];
    const double candidate = (running - mass) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(v[i] - tau, 0.0);
  return out;
}

}  // namespace routesignal
