#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairgen/error.hpp"
#include "fairgen/mat.hpp"
#include "fairgen/rng.hpp"
#include "fairgen/sentiment.hpp"
#include "fairgen/tape.hpp"
#include "fairgen/train.hpp"
#include "fairgen/transformer.hpp"
#include "fairgen/vocab.hpp"

namespace fairgen {

// Sentiment projection head f_sh: three affine layers with tanh activations
// between them, hidden width 128, 2-class output. The second activation
// (width 128) doubles as the sentiment projection used by the
// sentiment-regularization loss.
struct SentimentHead {
  static constexpr int kHidden = 128;

  int d_in = 0;
  Mat w1, b1;  // d_in x 128
  Mat w2, b2;  // 128 x 128
  Mat w3, b3;  // 128 x 2

  static SentimentHead init(int d_in, uint64_t seed) {
    require(d_in > 0, errc::invalid_config, "head input width must be positive");
    Rng rng(derive_seed(seed, 0x5ead));
    SentimentHead h;
    h.d_in = d_in;
    h.w1 = Mat::randn(d_in, kHidden, 1.0 / std::sqrt(static_cast<double>(d_in)), rng);
    h.b1 = Mat::zeros(1, kHidden);
    h.w2 = Mat::randn(kHidden, kHidden, 1.0 / std::sqrt(static_cast<double>(kHidden)), rng);
    h.b2 = Mat::zeros(1, kHidden);
    h.w3 = Mat::randn(kHidden, 2, 1.0 / std::sqrt(static_cast<double>(kHidden)), rng);
    h.b3 = Mat::zeros(1, 2);
    return h;
  }

  std::vector<std::pair<std::string, Mat*>> named_tensors() {
    return {{"w1", &w1}, {"b1", &b1}, {"w2", &w2}, {"b2", &b2}, {"w3", &w3}, {"b3", &b3}};
  }

  std::vector<std::pair<std::string, const Mat*>> named_tensors() const {
    auto mut = const_cast<SentimentHead*>(this)->named_tensors();
    return std::vector<std::pair<std::string, const Mat*>>(mut.begin(), mut.end());
  }

  // Final hidden activation (width 128) on the plain path.
  std::vector<double> projection(std::span<const double> h) const {
    require(static_cast<int>(h.size()) == d_in, errc::invalid_config,
            "head input width mismatch");
    std::vector<double> a1(kHidden);
    for (int j = 0; j < kHidden; ++j) {
      double s = b1(0, j);
      for (int i = 0; i < d_in; ++i) s += h[i] * w1(i, j);
      a1[j] = std::tanh(s);
    }
    std::vector<double> a2(kHidden);
    for (int j = 0; j < kHidden; ++j) {
      double s = b2(0, j);
      for (int i = 0; i < kHidden; ++i) s += a1[i] * w2(i, j);
      a2[j] = std::tanh(s);
    }
    return a2;
  }

  std::array<double, 2> logits(std::span<const double> h) const {
    std::vector<double> a2 = projection(h);
    std::array<double, 2> out = {b3(0, 0), b3(0, 1)};
    for (int i = 0; i < kHidden; ++i) {
      out[0] += a2[i] * w3(i, 0);
      out[1] += a2[i] * w3(i, 1);
    }
    return out;
  }

  int predict(std::span<const double> h) const {
    std::array<double, 2> l = logits(h);
    return l[1] > l[0] ? 1 : 0;
  }
};

// Head parameters injected into a tape (fixed order: w1,b1,w2,b2,w3,b3).
struct HeadParamNodes {
  std::array<Tape::NodeId, 6> ids;
};

inline HeadParamNodes inject_head_params(Tape& tape, const SentimentHead& head) {
  HeadParamNodes pn;
  int i = 0;
  for (const auto& [name, mat] : head.named_tensors()) pn.ids[i++] = tape.input(*mat);
  return pn;
}

// Projection (B x 128) of a feature batch (B x d_in) on the tape.
inline Tape::NodeId head_projection_tape(Tape& tape, const HeadParamNodes& pn,
                                         Tape::NodeId features) {
  Tape::NodeId a1 = tape.tanh_act(tape.affine(features, pn.ids[0], pn.ids[1]));
  return tape.tanh_act(tape.affine(a1, pn.ids[2], pn.ids[3]));
}

inline Tape::NodeId head_logits_tape(Tape& tape, const HeadParamNodes& pn, Tape::NodeId features) {
  return tape.affine(head_projection_tape(tape, pn, features), pn.ids[4], pn.ids[5]);
}

// ---------------------------------------------------------------------------
// Dataset construction (curriculum step 2)
// ---------------------------------------------------------------------------

struct HeadExample {
  std::vector<double> feature;  // sentence-pooled h-bar
  int label = 0;                // 1 positive, 0 negative
};

// Keeps sentences with at least `min_opinion_words` opinion words whose
// lexicon score clears pos_threshold (label 1) or falls below neg_threshold
// (label 0); the feature is the mean of h-bar over the sentence's word
// positions. Sentences longer than the model context are skipped.
inline std::vector<HeadExample> build_head_dataset(const std::vector<TokenSeq>& corpus,
                                                   const LmModel& model, const Vocab& vocab,
                                                   const Lexicon& lex, double pos_threshold = 0.8,
                                                   double neg_threshold = 0.2,
                                                   int min_opinion_words = 2) {
  require(pos_threshold > neg_threshold, errc::invalid_config,
          "positive threshold must exceed negative threshold");
  std::vector<HeadExample> out;
  for (const TokenSeq& words : corpus) {
    if (words.empty()) continue;
    int opinion = 0;
    for (const std::string& w : words)
      if (lex.is_opinion_word(w)) ++opinion;
    if (opinion < min_opinion_words) continue;
    const double score = lexicon_score(words, lex);
    int label;
    if (score >= pos_threshold)
      label = 1;
    else if (score <= neg_threshold)
      label = 0;
    else
      continue;
    std::vector<int> ids;
    ids.push_back(Vocab::kBos);
    for (int id : vocab.encode(words)) ids.push_back(id);
    if (static_cast<int>(ids.size()) > model.cfg.context) continue;
    ForwardResult f = lm_forward(model, ids);
    std::vector<double> pooled(model.cfg.d_model, 0.0);
    const int T = static_cast<int>(ids.size());
    for (int t = 1; t < T; ++t) {  // word positions only, <bos> excluded
      std::vector<double> hb = h_bar(f.stack, t);
      for (int c = 0; c < model.cfg.d_model; ++c) pooled[c] += hb[c];
    }
    for (double& v : pooled) v /= (T - 1);
    out.push_back(HeadExample{std::move(pooled), label});
  }
  require(!out.empty(), errc::no_qualifying_sentences,
          "no sentence cleared the sentiment thresholds");
  return out;
}

// ---------------------------------------------------------------------------
// Head training (curriculum step 2)
// ---------------------------------------------------------------------------

struct HeadTrainConfig {
  int steps = 400;
  int batch_size = 32;
  double lr = 1e-2;
  uint64_t seed = 0;
  double holdout_fraction = 0.2;
};

struct HeadTrainResult {
  double holdout_accuracy = 0.0;
  int train_count = 0;
  int holdout_count = 0;
  std::vector<double> loss_curve;
};

// Cross-entropy training of the head on frozen features; reports held-out
// accuracy. Deterministic given cfg.seed.
inline HeadTrainResult train_sentiment_head(SentimentHead& head,
                                            const std::vector<HeadExample>& dataset,
                                            const HeadTrainConfig& cfg) {
  require(!dataset.empty(), errc::empty_batch, "empty head dataset");
  bool has0 = false, has1 = false;
  for (const HeadExample& ex : dataset) (ex.label ? has1 : has0) = true;
  require(has0 && has1, errc::single_class_dataset,
          "head training needs both sentiment classes");
  require(cfg.holdout_fraction >= 0.0 && cfg.holdout_fraction < 1.0, errc::invalid_config,
          "holdout_fraction must lie in [0, 1)");

  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(derive_seed(cfg.seed, 0x51));
  split_rng.shuffle(order);
  size_t n_holdout = static_cast<size_t>(cfg.holdout_fraction * static_cast<double>(order.size()));
  std::vector<size_t> train_idx(order.begin(), order.end() - n_holdout);
  std::vector<size_t> hold_idx(order.end() - n_holdout, order.end());
  if (hold_idx.empty()) hold_idx = train_idx;
  require(!train_idx.empty(), errc::empty_batch, "no head training examples after holdout split");

  auto tensors = head.named_tensors();
  std::vector<Mat*> params;
  for (auto& [name, mat] : tensors) params.push_back(mat);
  Adam opt(params, cfg.lr);

  HeadTrainResult result;
  result.train_count = static_cast<int>(train_idx.size());
  result.holdout_count = static_cast<int>(hold_idx.size());

  Rng order_rng(derive_seed(cfg.seed, 0x52));
  size_t cursor = train_idx.size();
  const int d_in = head.d_in;
  for (int step = 0; step < cfg.steps; ++step) {
    const int B = std::min<int>(cfg.batch_size, static_cast<int>(train_idx.size()));
    Mat features(B, d_in);
    std::vector<int> labels(B);
    for (int b = 0; b < B; ++b) {
      if (cursor >= train_idx.size()) {
        order_rng.shuffle(train_idx);
        cursor = 0;
      }
      const HeadExample& ex = dataset[train_idx[cursor++]];
      require(static_cast<int>(ex.feature.size()) == d_in, errc::invalid_config,
              "head example width mismatch");
      std::copy(ex.feature.begin(), ex.feature.end(), features.row_ptr(b));
      labels[b] = ex.label;
    }
    Tape tape;
    HeadParamNodes pn = inject_head_params(tape, head);
    Tape::NodeId loss =
        tape.cross_entropy_mean(head_logits_tape(tape, pn, tape.input(std::move(features))),
                                std::move(labels));
    const double loss_value = tape.val(loss)(0, 0);
    require(std::isfinite(loss_value), errc::diverged_loss, "non-finite head loss");
    result.loss_curve.push_back(loss_value);
    tape.backward(loss);
    std::vector<const Mat*> grads;
    for (Tape::NodeId id : pn.ids) grads.push_back(&tape.grad(id));
    opt.step(grads);
  }

  int correct = 0;
  for (size_t i : hold_idx)
    if (head.predict(dataset[i].feature) == dataset[i].label) ++correct;
  result.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(hold_idx.size());
  return result;
}

}  // namespace fairgen
