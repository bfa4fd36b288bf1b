#pragma once

#include <cmath>
#include <cstddef>

#include "fairgen/distribution.hpp"
#include "fairgen/error.hpp"

namespace fairgen {

// Exact Wasserstein-1 distance between two empirical distributions,
// computed as the integral of |F_p(t) - F_q(t)| over the pooled sorted
// breakpoints. Works for arbitrary (unequal) sample counts; for equal
// counts it coincides with the mean absolute difference of order
// statistics. Symmetric, and exactly zero whenever the two empirical
// CDFs coincide: each CDF value is a single division i/n, so equal
// rationals i/n == j/m land on the same double.
inline double wasserstein1(const ScoreDistribution& p, const ScoreDistribution& q) {
  require(!p.empty() && !q.empty(), errc::empty_distribution, "wasserstein1 needs non-empty inputs");

  const auto& a = p.samples();
  const auto& b = q.samples();
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());

  double dist = 0.0;
  double prev = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    double t;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      t = a[i];
    } else {
      t = b[j];
    }
    dist += std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m) * (t - prev);
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
    prev = t;
  }
  // Beyond the largest breakpoint both CDFs are 1, contributing nothing.
  return dist;
}

// Demographic disparity at decision threshold tau: the absolute difference
// of strict positive-classification rates |Pr(p > tau) - Pr(q > tau)|.
inline double demographic_disparity(const ScoreDistribution& p, const ScoreDistribution& q,
                                    double tau) {
  require(!p.empty() && !q.empty(), errc::empty_distribution,
          "demographic_disparity needs non-empty inputs");
  return std::abs(p.fraction_above(tau) - q.fraction_above(tau));
}

}  // namespace fairgen
