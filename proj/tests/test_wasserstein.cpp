#include <algorithm>
#include <cmath>
#include <vector>

#include "catch_amalgamated.hpp"
#include "fairgen/rng.hpp"
#include "fairgen/wasserstein.hpp"

using fairgen::Rng;
using fairgen::ScoreDistribution;

namespace {

// Independent oracle: midpoint-rule integration of |F_p - F_q| over a fine
// grid on [0, 1]. Deliberately avoids the pooled-breakpoint sweep that the
// implementation uses.
double grid_w1(const std::vector<double>& a_sorted, const std::vector<double>& b_sorted,
               int grid_points) {
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  for (int g = 0; g < grid_points; ++g) {
    const double t = (g + 0.5) / grid_points;
    while (i < a_sorted.size() && a_sorted[i] <= t) ++i;
    while (j < b_sorted.size() && b_sorted[j] <= t) ++j;
    sum += std::abs(static_cast<double>(i) / a_sorted.size() -
                    static_cast<double>(j) / b_sorted.size());
  }
  return sum / grid_points;
}

std::vector<double> random_samples(Rng& rng, std::size_t min_n, std::size_t max_n) {
  const auto n = min_n + rng.uniform_index(max_n - min_n + 1);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform();
  return v;
}

}  // namespace

TEST_CASE("point mass translation") {
  ScoreDistribution p({0.2, 0.2, 0.2});
  ScoreDistribution q({0.7, 0.7, 0.7});
  CHECK(fairgen::wasserstein1(p, q) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("identical distributions have zero distance") {
  ScoreDistribution p({0.13, 0.4, 0.77, 0.77});
  CHECK(fairgen::wasserstein1(p, p) == 0.0);
}

TEST_CASE("uniform shift of order statistics") {
  ScoreDistribution p({0.1, 0.5, 0.9});
  ScoreDistribution q({0.2, 0.6, 1.0});
  CHECK(fairgen::wasserstein1(p, q) == Catch::Approx(0.1).margin(1e-15));
}

TEST_CASE("unequal sample counts") {
  // Frozen from the grid-integration oracle: F_p = 0.5 on (0,1) while F_q
  // steps at 0.5, so the integrand is 0.5 everywhere.
  ScoreDistribution p({0.0, 1.0});
  ScoreDistribution q({0.5});
  const double expected = grid_w1(p.samples(), q.samples(), 1000000);
  CHECK(expected == Catch::Approx(0.5).margin(1e-6));
  CHECK(fairgen::wasserstein1(p, q) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("empty distribution is rejected") {
  CHECK_THROWS_AS(ScoreDistribution(std::vector<double>{}), fairgen::error);
}

TEST_CASE("matches grid oracle on random pairs") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    ScoreDistribution p(random_samples(rng, 1, 12));
    ScoreDistribution q(random_samples(rng, 1, 12));
    const double exact = fairgen::wasserstein1(p, q);
    const double approx = grid_w1(p.samples(), q.samples(), 200000);
    CHECK(exact == Catch::Approx(approx).margin(1e-5));
  }
}

TEST_CASE("equal counts reduce to mean absolute order-statistic difference") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.uniform_index(20);
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = rng.uniform();
    for (auto& x : b) x = rng.uniform();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double mean_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_abs += std::abs(a[i] - b[i]);
    mean_abs /= static_cast<double>(n);
    CHECK(fairgen::wasserstein1(ScoreDistribution(a), ScoreDistribution(b)) ==
          Catch::Approx(mean_abs).margin(1e-12));
  }
}

TEST_CASE("metric properties on random triples") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    ScoreDistribution p(random_samples(rng, 1, 10));
    ScoreDistribution q(random_samples(rng, 1, 10));
    ScoreDistribution r(random_samples(rng, 1, 10));
    const double pq = fairgen::wasserstein1(p, q);
    const double qp = fairgen::wasserstein1(q, p);
    const double pr = fairgen::wasserstein1(p, r);
    const double rq = fairgen::wasserstein1(r, q);
    CHECK(pq >= 0.0);
    CHECK(pq == Catch::Approx(qp).margin(1e-12));
    CHECK(pq <= pr + rq + 1e-12);
  }
}

TEST_CASE("translation invariance") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 6; ++i) a.push_back(rng.uniform(0.2, 0.6));
    for (int i = 0; i < 9; ++i) b.push_back(rng.uniform(0.2, 0.6));
    const double delta = rng.uniform(0.0, 0.3);
    auto shift = [delta](std::vector<double> v) {
      for (auto& x : v) x += delta;
      return v;
    };
    const double base = fairgen::wasserstein1(ScoreDistribution(a), ScoreDistribution(b));
    const double moved = fairgen::wasserstein1(ScoreDistribution(shift(a)), ScoreDistribution(shift(b)));
    CHECK(base == Catch::Approx(moved).margin(1e-12));

    // Moving only one side changes the distance by at most delta.
    const double one_sided = fairgen::wasserstein1(ScoreDistribution(a), ScoreDistribution(shift(b)));
    CHECK(std::abs(one_sided - base) <= delta + 1e-12);
  }
  // Equality for point masses.
  const double d = fairgen::wasserstein1(ScoreDistribution({0.2, 0.2}), ScoreDistribution({0.5, 0.5}));
  CHECK(d == Catch::Approx(0.3).margin(1e-15));
}

TEST_CASE("demographic disparity basics") {
  ScoreDistribution p({0.1, 0.4, 0.6, 0.9});
  CHECK(fairgen::demographic_disparity(p, p, 0.3) == 0.0);
  CHECK(fairgen::demographic_disparity(p, p, 0.77) == 0.0);

  // Pr(p > 0.5) = 0.8, Pr(q > 0.5) = 0.3.
  std::vector<double> a, b;
  for (int i = 0; i < 8; ++i) a.push_back(0.9);
  for (int i = 0; i < 2; ++i) a.push_back(0.1);
  for (int i = 0; i < 3; ++i) b.push_back(0.9);
  for (int i = 0; i < 7; ++i) b.push_back(0.1);
  CHECK(fairgen::demographic_disparity(ScoreDistribution(a), ScoreDistribution(b), 0.5) ==
        Catch::Approx(0.5).margin(1e-15));

  // At tau = 1.0 every sample fails the strict inequality.
  ScoreDistribution q({0.3, 1.0});
  CHECK(fairgen::demographic_disparity(p, q, 1.0) == 0.0);
}

TEST_CASE("strict inequality at the threshold") {
  ScoreDistribution p({0.5, 0.5});
  ScoreDistribution q({0.4, 0.6});
  // Ties at tau are excluded: Pr(p > 0.5) = 0, Pr(q > 0.5) = 0.5.
  CHECK(fairgen::demographic_disparity(p, q, 0.5) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("tau-averaged disparity equals wasserstein distance") {
  // Monte-Carlo check of the integral identity behind the metric.
  Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    ScoreDistribution p(random_samples(rng, 2, 12));
    ScoreDistribution q(random_samples(rng, 2, 12));
    const double exact = fairgen::wasserstein1(p, q);

    const int draws = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double tau = rng.uniform();
      const double d = fairgen::demographic_disparity(p, q, tau);
      sum += d;
      sum_sq += d * d;
    }
    const double mean = sum / draws;
    const double var = (sum_sq / draws - mean * mean) / draws;
    const double se = std::sqrt(std::max(var, 0.0));
    CHECK(std::abs(mean - exact) <= 3.0 * se + 1e-9);
  }
}
