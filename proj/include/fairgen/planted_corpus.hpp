#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fairgen/attribute_spec.hpp"
#include "fairgen/error.hpp"
#include "fairgen/rng.hpp"
#include "fairgen/sentiment.hpp"
#include "fairgen/text.hpp"

namespace fairgen {

// Synthetic planted-bias corpus: each subgroup co-occurs with positive
// adjectives at a configured rate, giving a known sentiment bias for the
// pipeline to detect and remove.
struct PlantedBiasConfig {
  std::map<std::string, double> positive_prob;  // subgroup value -> P(positive sentence)
  int sentences = 0;
  uint64_t seed = 0;
  double filler_fraction = 0.3;  // sensitive-free share, keeps PPL^s != PPL
  int adjective_pool = 12;       // adjectives drawn per polarity (keeps vocab small)
};

namespace detail {

// Smallest `count` words of a set, alphabetically — deterministic pools.
inline std::vector<std::string> first_words(const std::unordered_set<std::string>& words,
                                            int count) {
  std::vector<std::string> sorted(words.begin(), words.end());
  std::sort(sorted.begin(), sorted.end());
  if (static_cast<int>(sorted.size()) > count) sorted.resize(count);
  return sorted;
}

}  // namespace detail

// Deterministic given cfg.seed. Sentence grammar: "<token> is <adjective>"
// variants whose non-adjective words are opinion-free, so a sentence's
// lexicon score is exactly 1.0 (all-positive adjectives) or 0.0.
inline std::vector<TokenSeq> generate_planted_corpus(const PlantedBiasConfig& cfg,
                                                     const AttributeSpec& spec,
                                                     const Lexicon& lex) {
  require(cfg.sentences > 0, errc::invalid_probability,
          "planted corpus needs a positive sentence count");
  require(cfg.filler_fraction >= 0.0 && cfg.filler_fraction < 1.0, errc::invalid_config,
          "filler_fraction must lie in [0, 1)");
  require(cfg.adjective_pool > 0, errc::invalid_config, "adjective_pool must be positive");
  for (const SubgroupSpec& sub : spec.subgroups()) {
    auto it = cfg.positive_prob.find(sub.value);
    require(it != cfg.positive_prob.end(), errc::invalid_probability,
            "no positive probability configured for subgroup '" + sub.value + "'");
    require(it->second >= 0.0 && it->second <= 1.0, errc::invalid_probability,
            "positive probability for '" + sub.value + "' outside [0, 1]");
  }

  const std::vector<std::string> pos_adj = detail::first_words(lex.positive(), cfg.adjective_pool);
  const std::vector<std::string> neg_adj = detail::first_words(lex.negative(), cfg.adjective_pool);

  // Grammar scaffolding. None of these words may carry lexicon sentiment,
  // otherwise the planted scores would drift off {0, 1}.
  static const std::vector<std::vector<std::string>> kSensitiveForms = {
      {"<tok>", "is", "<adj>", "."},
      {"<tok>", "is", "very", "<adj>", "."},
      {"the", "<tok>", "is", "<adj>", "and", "<adj>", "."},
      {"<tok>", "was", "<adj>", "today", "."},
      {"people", "say", "<tok>", "is", "<adj>", "."},
  };
  static const std::vector<std::vector<std::string>> kFillerForms = {
      {"the", "market", "opened", "in", "the", "morning", "."},
      {"we", "walked", "to", "the", "station", "yesterday", "."},
      {"the", "train", "arrived", "at", "noon", "."},
      {"rain", "fell", "through", "the", "night", "."},
      {"the", "meeting", "starts", "after", "lunch", "."},
  };
  for (const auto& form : kSensitiveForms)
    for (const auto& w : form)
      require(w == "<adj>" || !lex.is_opinion_word(w), errc::invalid_config,
              "grammar word collides with the lexicon: " + w);
  for (const auto& form : kFillerForms)
    for (const auto& w : form)
      require(!lex.is_opinion_word(w), errc::invalid_config,
              "filler word collides with the lexicon: " + w);

  Rng rng(derive_seed(cfg.seed, 0xc0a9));
  const int n_filler =
      static_cast<int>(std::lround(cfg.filler_fraction * static_cast<double>(cfg.sentences)));
  const auto& subgroups = spec.subgroups();

  std::vector<TokenSeq> corpus;
  corpus.reserve(cfg.sentences);
  for (int i = 0; i < cfg.sentences; ++i) {
    if (i < n_filler) {
      corpus.push_back(kFillerForms[rng.uniform_index(kFillerForms.size())]);
      continue;
    }
    const SubgroupSpec& sub = subgroups[rng.uniform_index(subgroups.size())];
    const std::string& token = sub.tokens[rng.uniform_index(sub.tokens.size())];
    const bool positive = rng.uniform() < cfg.positive_prob.at(sub.value);
    const std::vector<std::string>& pool = positive ? pos_adj : neg_adj;
    const std::vector<std::string>& form = kSensitiveForms[rng.uniform_index(kSensitiveForms.size())];
    TokenSeq sentence;
    sentence.reserve(form.size());
    for (const std::string& w : form) {
      if (w == "<tok>")
        sentence.push_back(token);
      else if (w == "<adj>")
        sentence.push_back(pool[rng.uniform_index(pool.size())]);
      else
        sentence.push_back(w);
    }
    corpus.push_back(std::move(sentence));
  }
  rng.shuffle(corpus);
  return corpus;
}

}  // namespace fairgen
