#pragma once

#include <fstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fairgen/distribution.hpp"
#include "fairgen/error.hpp"
#include "fairgen/text.hpp"

namespace fairgen {

// Opinion-word lists. Words are stored lowercase; matching is
// case-insensitive on exact tokens (no stemming, no negation handling).
class Lexicon {
 public:
  Lexicon(std::unordered_set<std::string> positive, std::unordered_set<std::string> negative)
      : positive_(std::move(positive)), negative_(std::move(negative)) {
    require(!positive_.empty() && !negative_.empty(), errc::invalid_config,
            "lexicon polarity sets must be non-empty");
    for (const auto& w : positive_) {
      require(!negative_.count(w), errc::invalid_config,
              "word '" + w + "' is both positive and negative");
    }
  }

  bool is_positive(std::string_view token) const { return positive_.count(to_lower(token)) > 0; }
  bool is_negative(std::string_view token) const { return negative_.count(to_lower(token)) > 0; }
  bool is_opinion_word(std::string_view token) const {
    return is_positive(token) || is_negative(token);
  }

  const std::unordered_set<std::string>& positive() const noexcept { return positive_; }
  const std::unordered_set<std::string>& negative() const noexcept { return negative_; }

  Lexicon flipped() const { return Lexicon(negative_, positive_); }

  // One lowercase word per line; lines starting with ';' are comments.
  static std::unordered_set<std::string> load_word_list(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::io_error, "cannot open word list " + path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n' || line.back() == ' '))
        line.pop_back();
      if (line.empty() || line[0] == ';') continue;
      words.insert(to_lower(line));
    }
    return words;
  }

  static Lexicon load(const std::string& positive_path, const std::string& negative_path) {
    return Lexicon(load_word_list(positive_path), load_word_list(negative_path));
  }

 private:
  std::unordered_set<std::string> positive_;
  std::unordered_set<std::string> negative_;
};

// Small fixed lexicon for tests and for the synthetic corpus generator's
// default adjective pools.
inline const Lexicon& builtin_test_lexicon() {
  static const Lexicon lex(
      {"good", "great", "happy", "wonderful", "excellent", "pleasant", "lovely", "delightful",
       "brilliant", "calm", "friendly", "generous", "honest", "kind", "bright", "cheerful"},
      {"bad", "terrible", "awful", "horrible", "sad", "unpleasant", "dreadful", "miserable",
       "gloomy", "angry", "hostile", "greedy", "dishonest", "cruel", "dull", "bitter"});
  return lex;
}

// Opinion-word score: p / (p + n) over case-insensitive token matches,
// 0.5 when the text contains no opinion words.
inline double lexicon_score(const TokenSeq& text, const Lexicon& lex) {
  std::size_t p = 0, n = 0;
  for (const auto& tok : text) {
    if (lex.is_positive(tok))
      ++p;
    else if (lex.is_negative(tok))
      ++n;
  }
  if (p + n == 0) return 0.5;
  return static_cast<double>(p) / static_cast<double>(p + n);
}

// Sentiment scorer abstraction f_s: text -> [0,1]. Deterministic for fixed
// inputs. The lexicon scorer is the reference implementation; external
// classifiers plug in behind the same interface.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const TokenSeq& text) const = 0;
  virtual std::string name() const = 0;
};

class LexiconScorer final : public Scorer {
 public:
  explicit LexiconScorer(Lexicon lex) : lex_(std::move(lex)) {}

  double score(const TokenSeq& text) const override { return lexicon_score(text, lex_); }
  std::string name() const override { return "lexicon"; }

  const Lexicon& lexicon() const noexcept { return lex_; }

 private:
  Lexicon lex_;
};

inline ScoreDistribution score_batch(const std::vector<TokenSeq>& texts, const Scorer& scorer) {
  require(!texts.empty(), errc::empty_batch, "score_batch needs at least one text");
  std::vector<double> scores;
  scores.reserve(texts.size());
  for (const auto& t : texts) scores.push_back(scorer.score(t));
  return ScoreDistribution(std::move(scores));
}

}  // namespace fairgen
