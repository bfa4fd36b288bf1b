#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairgen/distribution.hpp"
#include "fairgen/error.hpp"
#include "fairgen/wasserstein.hpp"

namespace fairgen {

// One pairwise Wasserstein-1 distance between the sentiment distributions of
// two attribute values under the same template.
struct PairwiseDistance {
  int template_id = 0;
  std::string value_a;
  std::string value_b;
  double w1 = 0.0;
};

// Keyed by (template id, attribute value). std::map keeps iteration order
// deterministic, which the report serialization relies on.
using TemplateValueDists = std::map<std::pair<int, std::string>, ScoreDistribution>;

// Average individual fairness: the mean Wasserstein-1 distance over all
// templates and unordered pairs of distinct attribute values,
//   (2 / (M |A| (|A|-1))) * sum_m sum_{a != a~} W1(P_m_a, P_m_a~).
// `pairwise_out`, when given, receives every pairwise distance.
inline double individual_fairness(const TemplateValueDists& dists,
                                  const std::vector<int>& template_ids,
                                  const std::vector<std::string>& values,
                                  std::vector<PairwiseDistance>* pairwise_out = nullptr) {
  require(values.size() >= 2, errc::invalid_config, "individual fairness needs at least 2 values");
  require(!template_ids.empty(), errc::empty_templates, "individual fairness needs templates");

  double total = 0.0;
  std::size_t pairs = 0;
  for (int m : template_ids) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (std::size_t j = i + 1; j < values.size(); ++j) {
        const auto a = dists.find({m, values[i]});
        const auto b = dists.find({m, values[j]});
        require(a != dists.end(), errc::missing_distribution,
                "no distribution for template " + std::to_string(m) + ", value " + values[i]);
        require(b != dists.end(), errc::missing_distribution,
                "no distribution for template " + std::to_string(m) + ", value " + values[j]);
        const double w = wasserstein1(a->second, b->second);
        if (pairwise_out) pairwise_out->push_back({m, values[i], values[j], w});
        total += w;
        ++pairs;
      }
    }
  }
  return total / static_cast<double>(pairs);
}

struct GroupFairnessResult {
  double value = 0.0;
  ScoreDistribution pooled;                  // P*, the union over all subgroups
  std::map<std::string, double> subgroup_w1; // W1(P^a, P*) per subgroup
};

// Average group fairness: each subgroup's distance to the pooled
// distribution, averaged over subgroups,
//   (1/|A|) * sum_a W1(P^a, P*).
inline GroupFairnessResult group_fairness(const std::map<std::string, ScoreDistribution>& subgroups) {
  require(!subgroups.empty(), errc::empty_distribution, "group fairness needs at least one subgroup");

  std::vector<const ScoreDistribution*> parts;
  parts.reserve(subgroups.size());
  for (const auto& [value, dist] : subgroups) {
    require(!dist.empty(), errc::empty_distribution, "empty distribution for subgroup " + value);
    parts.push_back(&dist);
  }

  GroupFairnessResult result;
  result.pooled = ScoreDistribution::pooled(parts);
  double total = 0.0;
  for (const auto& [value, dist] : subgroups) {
    const double w = wasserstein1(dist, result.pooled);
    result.subgroup_w1[value] = w;
    total += w;
  }
  result.value = total / static_cast<double>(subgroups.size());
  return result;
}

// Everything measured for one evaluated model: the fairness aggregates, the
// full pairwise matrix behind them, model quality (PPL, PPL on the subset of
// sequences containing sensitive tokens), and the semantic relevance proxies.
struct FairnessReport {
  std::string attribute;
  double individual_fairness = 0.0;
  double group_fairness = 0.0;
  std::vector<PairwiseDistance> pairwise_w1;
  std::map<std::string, double> subgroup_w1;
  std::optional<double> epsilon;
  std::optional<bool> is_fair;  // all pairwise W1 < epsilon
  std::optional<double> ppl;
  std::optional<double> ppl_subset;
  double semantic_similarity = 0.0;   // fraction with prefix cosine > threshold
  double mention_fraction = 0.0;      // fraction mentioning the sensitive token
  // Sorted per-(template, value) score samples; only kept when requested.
  std::map<std::pair<int, std::string>, std::vector<double>> samples;

  void apply_epsilon(double eps) {
    epsilon = eps;
    bool fair = true;
    for (const auto& e : pairwise_w1) fair = fair && (e.w1 < eps);
    is_fair = fair;
  }
};

}  // namespace fairgen
