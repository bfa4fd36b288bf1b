#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "fairgen/error.hpp"

namespace fairgen {

// Empirical distribution of sentiment scores in [0, 1]. Samples are kept
// sorted ascending; duplicates are allowed (it is a multiset).
class ScoreDistribution {
 public:
  ScoreDistribution() = default;

  explicit ScoreDistribution(std::vector<double> samples) : samples_(std::move(samples)) {
    require(!samples_.empty(), errc::empty_distribution, "a distribution needs at least one sample");
    for (double s : samples_) {
      require(s >= 0.0 && s <= 1.0, errc::invalid_probability, "sample outside [0,1]");
    }
    std::sort(samples_.begin(), samples_.end());
  }

  const std::vector<double>& samples() const noexcept { return samples_; }
  std::size_t count() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  double min() const { return samples_.front(); }
  double max() const { return samples_.back(); }

  double mean() const {
    double acc = 0.0;
    for (double s : samples_) acc += s;
    return acc / static_cast<double>(samples_.size());
  }

  // Empirical CDF: fraction of samples <= x.
  double cdf(double x) const {
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
    return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
  }

  // Fraction of samples strictly greater than tau.
  double fraction_above(double tau) const { return 1.0 - cdf(tau); }

  // Multiset union, used for the pooled distribution P* in the group metric.
  static ScoreDistribution pooled(const std::vector<const ScoreDistribution*>& parts) {
    std::vector<double> all;
    std::size_t total = 0;
    for (const auto* p : parts) total += p ? p->count() : 0;
    all.reserve(total);
    for (const auto* p : parts) {
      if (!p) continue;
      all.insert(all.end(), p->samples().begin(), p->samples().end());
    }
    return ScoreDistribution(std::move(all));
  }

 private:
  std::vector<double> samples_;
};

}  // namespace fairgen
