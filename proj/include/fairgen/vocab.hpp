#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairgen/error.hpp"
#include "fairgen/text.hpp"

namespace fairgen {

// Token <-> id bijection with reserved ids. Attribute tokens are forced into
// the vocabulary ahead of corpus tokens so counterfactual substitution never
// hits <unk>.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;

  Vocab() {
    add_token("<unk>");
    add_token("<bos>");
    add_token("<eos>");
  }

  // Builds from a corpus: reserved ids, then forced tokens in the given
  // order, then corpus tokens by descending frequency (ties broken
  // lexicographically) up to max_size total entries.
  static Vocab build(const std::vector<TokenSeq>& corpus, const std::vector<std::string>& forced,
                     size_t max_size = 2000) {
    Vocab v;
    for (const std::string& t : forced) v.add_token_if_absent(t);
    require(v.size() <= max_size, errc::invalid_config, "vocab max_size below forced token count");
    std::map<std::string, long> counts;
    for (const TokenSeq& seq : corpus)
      for (const std::string& t : seq) ++counts[t];
    std::vector<std::pair<std::string, long>> by_freq(counts.begin(), counts.end());
    std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (const auto& [tok, cnt] : by_freq) {
      if (v.size() >= max_size) break;
      v.add_token_if_absent(tok);
    }
    return v;
  }

  // Reconstruction from a serialized token list (checkpoint loading).
  static Vocab from_tokens(const std::vector<std::string>& tokens) {
    require(tokens.size() >= 3 && tokens[0] == "<unk>" && tokens[1] == "<bos>" &&
                tokens[2] == "<eos>",
            errc::bad_checkpoint, "vocab token list lacks reserved prefix");
    Vocab v;
    for (size_t i = 3; i < tokens.size(); ++i) {
      require(!v.contains(tokens[i]), errc::bad_checkpoint, "duplicate vocab token " + tokens[i]);
      v.add_token(tokens[i]);
    }
    return v;
  }

  int id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const {
    require(id >= 0 && id < static_cast<int>(id_to_token_.size()), errc::invalid_config,
            "token id out of range");
    return id_to_token_[id];
  }

  bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }
  size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  std::vector<int> encode(const TokenSeq& words) const {
    std::vector<int> ids;
    ids.reserve(words.size());
    for (const std::string& w : words) ids.push_back(id(w));
    return ids;
  }

  TokenSeq decode(const std::vector<int>& ids) const {
    TokenSeq words;
    words.reserve(ids.size());
    for (int i : ids) words.push_back(token(i));
    return words;
  }

 private:
  void add_token(const std::string& t) {
    token_to_id_[t] = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(t);
  }
  void add_token_if_absent(const std::string& t) {
    if (!contains(t)) add_token(t);
  }

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace fairgen
