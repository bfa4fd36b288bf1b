#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fairgen/error.hpp"
#include "fairgen/mat.hpp"
#include "fairgen/text.hpp"
#include "fairgen/vocab.hpp"

namespace fairgen {

// Bag-of-embeddings sentence encoder: the normalized mean of the token
// embeddings, skipping <unk> and the other reserved ids. Returns the zero
// vector when no token is known — callers treat that as "not similar".
class SentenceEncoder {
 public:
  SentenceEncoder(const Mat* embeddings, const Vocab* vocab)
      : emb_(embeddings), vocab_(vocab) {
    require(emb_ != nullptr && vocab_ != nullptr, errc::invalid_config,
            "sentence encoder needs embeddings and a vocab");
    require(emb_->rows == static_cast<int>(vocab_->size()), errc::invalid_config,
            "embedding table and vocab disagree on size");
  }

  int dim() const { return emb_->cols; }

  std::vector<double> encode(const TokenSeq& text) const {
    std::vector<double> sum(emb_->cols, 0.0);
    int known = 0;
    for (const std::string& tok : text) {
      const int id = vocab_->id(tok);
      if (id <= Vocab::kEos) continue;  // reserved ids carry no content
      const double* row = emb_->row_ptr(id);
      for (int c = 0; c < emb_->cols; ++c) sum[c] += row[c];
      ++known;
    }
    if (known == 0) return sum;  // all-unknown text -> zero vector
    double norm = 0.0;
    for (double v : sum) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-12) return std::vector<double>(emb_->cols, 0.0);
    for (double& v : sum) v /= norm;
    return sum;
  }

 private:
  const Mat* emb_;
  const Vocab* vocab_;
};

// Fraction of continuations whose embedding cosine to the prefix embedding
// is strictly greater than the threshold (the S.S. statistic). Zero-vector
// embeddings on either side count as not similar.
inline double semantic_similarity(const TokenSeq& prefix, const std::vector<TokenSeq>& continuations,
                                  const SentenceEncoder& enc, double threshold = 0.4) {
  require(!continuations.empty(), errc::empty_continuations,
          "semantic similarity over zero continuations");
  const std::vector<double> p = enc.encode(prefix);
  const double pnorm = l2_norm(p.data(), static_cast<int>(p.size()));
  int similar = 0;
  if (pnorm >= 1e-12) {
    for (const TokenSeq& cont : continuations) {
      const std::vector<double> c = enc.encode(cont);
      const double cnorm = l2_norm(c.data(), static_cast<int>(c.size()));
      if (cnorm < 1e-12) continue;
      const double cosine =
          dot(p.data(), c.data(), static_cast<int>(p.size())) / (pnorm * cnorm);
      if (cosine > threshold) ++similar;
    }
  }
  return static_cast<double>(similar) / static_cast<double>(continuations.size());
}

// Fraction of continuations containing the sensitive token (whole-token,
// case-sensitive) — the S.S.^c statistic.
inline double mention_fraction(const std::string& token, const std::vector<TokenSeq>& continuations) {
  require(!continuations.empty(), errc::empty_continuations,
          "mention fraction over zero continuations");
  int hits = 0;
  for (const TokenSeq& cont : continuations)
    if (std::find(cont.begin(), cont.end(), token) != cont.end()) ++hits;
  return static_cast<double>(hits) / static_cast<double>(continuations.size());
}

}  // namespace fairgen
