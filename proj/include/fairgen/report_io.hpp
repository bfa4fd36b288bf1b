#pragma once

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fairgen/error.hpp"
#include "fairgen/fairness_metrics.hpp"

namespace fairgen {

inline constexpr int kReportSchemaVersion = 1;

// Serializes a report with a fixed key order; identical reports dump to
// byte-identical JSON (nlohmann emits shortest-round-trip doubles).
inline nlohmann::ordered_json report_to_json(const FairnessReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["attribute"] = r.attribute;
  j["individual_fairness"] = r.individual_fairness;
  j["group_fairness"] = r.group_fairness;
  j["epsilon"] = r.epsilon ? nlohmann::ordered_json(*r.epsilon) : nlohmann::ordered_json(nullptr);
  j["is_fair"] = r.is_fair ? nlohmann::ordered_json(*r.is_fair) : nlohmann::ordered_json(nullptr);
  j["ppl"] = r.ppl ? nlohmann::ordered_json(*r.ppl) : nlohmann::ordered_json(nullptr);
  j["ppl_subset"] =
      r.ppl_subset ? nlohmann::ordered_json(*r.ppl_subset) : nlohmann::ordered_json(nullptr);
  j["semantic_similarity"] = r.semantic_similarity;
  j["mention_fraction"] = r.mention_fraction;
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const PairwiseDistance& p : r.pairwise_w1)
    pairs.push_back({{"template_id", p.template_id},
                     {"value_a", p.value_a},
                     {"value_b", p.value_b},
                     {"w1", p.w1}});
  j["pairwise_w1"] = std::move(pairs);
  nlohmann::ordered_json sub = nlohmann::ordered_json::object();
  for (const auto& [value, w1] : r.subgroup_w1) sub[value] = w1;
  j["subgroup_w1"] = std::move(sub);
  if (!r.samples.empty()) {
    nlohmann::ordered_json samples = nlohmann::ordered_json::object();
    for (const auto& [key, values] : r.samples)
      samples[std::to_string(key.first) + "|" + key.second] = values;
    j["samples"] = std::move(samples);
  }
  return j;
}

inline std::string report_to_json_string(const FairnessReport& r) {
  return report_to_json(r).dump(2) + "\n";
}

inline FairnessReport report_from_json(const nlohmann::json& j) {
  require(j.value("schema_version", -1) == kReportSchemaVersion, errc::invalid_config,
          "unsupported report schema version");
  FairnessReport r;
  try {
    r.attribute = j.at("attribute").get<std::string>();
    r.individual_fairness = j.at("individual_fairness").get<double>();
    r.group_fairness = j.at("group_fairness").get<double>();
    if (!j.at("epsilon").is_null()) r.epsilon = j.at("epsilon").get<double>();
    if (!j.at("is_fair").is_null()) r.is_fair = j.at("is_fair").get<bool>();
    if (!j.at("ppl").is_null()) r.ppl = j.at("ppl").get<double>();
    if (!j.at("ppl_subset").is_null()) r.ppl_subset = j.at("ppl_subset").get<double>();
    r.semantic_similarity = j.at("semantic_similarity").get<double>();
    r.mention_fraction = j.at("mention_fraction").get<double>();
    for (const nlohmann::json& p : j.at("pairwise_w1"))
      r.pairwise_w1.push_back(PairwiseDistance{p.at("template_id").get<int>(),
                                               p.at("value_a").get<std::string>(),
                                               p.at("value_b").get<std::string>(),
                                               p.at("w1").get<double>()});
    for (const auto& [value, w1] : j.at("subgroup_w1").items())
      r.subgroup_w1[value] = w1.get<double>();
    if (j.contains("samples")) {
      for (const auto& [key, values] : j.at("samples").items()) {
        const size_t bar = key.find('|');
        require(bar != std::string::npos, errc::invalid_config, "malformed sample key " + key);
        r.samples[{std::stoi(key.substr(0, bar)), key.substr(bar + 1)}] =
            values.get<std::vector<double>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_config, std::string("malformed report JSON: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Tabular output (the `report` subcommand and sweep emission)
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}
inline std::string opt_fmt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }
}  // namespace detail

inline std::string report_csv_header() {
  return "attribute,individual_fairness,group_fairness,ppl,ppl_subset,semantic_similarity,"
         "mention_fraction";
}

inline std::string report_csv_row(const FairnessReport& r) {
  std::ostringstream os;
  os << r.attribute << ',' << detail::fmt(r.individual_fairness) << ','
     << detail::fmt(r.group_fairness) << ',' << detail::opt_fmt(r.ppl) << ','
     << detail::opt_fmt(r.ppl_subset) << ',' << detail::fmt(r.semantic_similarity) << ','
     << detail::fmt(r.mention_fraction);
  return os.str();
}

inline std::string report_markdown(const FairnessReport& r) {
  std::ostringstream os;
  os << "# Fairness report: " << r.attribute << "\n\n";
  os << "| metric | value |\n|---|---|\n";
  os << "| individual fairness (I.F.) | " << detail::fmt(r.individual_fairness) << " |\n";
  os << "| group fairness (G.F.) | " << detail::fmt(r.group_fairness) << " |\n";
  os << "| perplexity (PPL) | " << detail::opt_fmt(r.ppl) << " |\n";
  os << "| sensitive-subset perplexity (PPL^s) | " << detail::opt_fmt(r.ppl_subset) << " |\n";
  os << "| semantic similarity (S.S.) | " << detail::fmt(r.semantic_similarity) << " |\n";
  os << "| mention fraction (S.S.^c) | " << detail::fmt(r.mention_fraction) << " |\n";
  if (r.epsilon)
    os << "| fair at epsilon = " << detail::fmt(*r.epsilon) << " | "
       << (*r.is_fair ? "yes" : "no") << " |\n";
  os << "\n## Pairwise W1 by template\n\n";
  os << "| template | value A | value B | W1 |\n|---|---|---|---|\n";
  for (const PairwiseDistance& p : r.pairwise_w1)
    os << "| " << p.template_id << " | " << p.value_a << " | " << p.value_b << " | "
       << detail::fmt(p.w1) << " |\n";
  os << "\n## Subgroup W1 vs pooled\n\n| subgroup | W1 |\n|---|---|\n";
  for (const auto& [value, w1] : r.subgroup_w1)
    os << "| " << value << " | " << detail::fmt(w1) << " |\n";
  return os.str();
}

// Trade-off table for lambda sweeps, one row per lambda.
inline std::string sweep_csv(const std::vector<std::pair<double, FairnessReport>>& rows) {
  std::ostringstream os;
  os << "lambda,individual_fairness,group_fairness,ppl,ppl_subset,semantic_similarity,"
        "mention_fraction\n";
  for (const auto& [lambda, r] : rows) {
    os << detail::fmt(lambda) << ',' << detail::fmt(r.individual_fairness) << ','
       << detail::fmt(r.group_fairness) << ',' << detail::opt_fmt(r.ppl) << ','
       << detail::opt_fmt(r.ppl_subset) << ',' << detail::fmt(r.semantic_similarity) << ','
       << detail::fmt(r.mention_fraction) << '\n';
  }
  return os.str();
}

// Companion gnuplot script rendering the I.F./S.S. trade-off from the CSV.
inline std::string sweep_gnuplot_script(const std::string& csv_name) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set logscale x\n"
     << "set xlabel 'lambda'\n"
     << "set ylabel 'metric value'\n"
     << "set terminal pngcairo size 900,600\n"
     << "set output 'tradeoff.png'\n"
     << "plot '" << csv_name << "' using 1:2 with linespoints title 'I.F.', \\\n"
     << "     '" << csv_name << "' using 1:6 with linespoints title 'S.S.'\n";
  return os.str();
}

}  // namespace fairgen
