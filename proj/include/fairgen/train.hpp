#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "fairgen/error.hpp"
#include "fairgen/mat.hpp"
#include "fairgen/rng.hpp"
#include "fairgen/tape.hpp"
#include "fairgen/transformer.hpp"

namespace fairgen {

// Adam optimizer over a fixed set of parameter tensors. Moments live here;
// the tensors themselves belong to the model being trained.
class Adam {
 public:
  Adam(std::vector<Mat*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Mat* p : params_) {
      m_.emplace_back(p->rows, p->cols);
      v_.emplace_back(p->rows, p->cols);
    }
  }

  double learning_rate() const { return lr_; }

  // One update from gradients aligned with the constructor's tensor order.
  void step(const std::vector<const Mat*>& grads) {
    check_shape(grads.size() == params_.size(), "adam step gradient count");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      Mat& p = *params_[i];
      const Mat& g = *grads[i];
      check_shape(p.same_shape(g), "adam step gradient shape");
      Mat& m = m_[i];
      Mat& v = v_[i];
      for (size_t e = 0; e < p.size(); ++e) {
        const double ge = g.data[e];
        m.data[e] = beta1_ * m.data[e] + (1.0 - beta1_) * ge;
        v.data[e] = beta2_ * v.data[e] + (1.0 - beta2_) * ge * ge;
        const double mhat = m.data[e] / bc1;
        const double vhat = v.data[e] / bc2;
        p.data[e] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

 private:
  std::vector<Mat*> params_;
  std::vector<Mat> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

struct TrainConfig {
  int steps = 1000;
  int batch_size = 8;
  double lr = 1e-3;
  uint64_t seed = 0;
  // Fraction of sequences held out for validation. 0 validates on the
  // training set itself (useful for memorization checks).
  double val_fraction = 0.1;
  int val_every = 0;  // 0 -> max(1, steps / 20)
};

struct LossCurves {
  std::vector<double> train;                  // batch loss per step
  std::vector<std::pair<int, double>> val;    // (step, mean NLL per token)
};

struct TrainResult {
  LossCurves curves;
  double final_val_ppl = 0.0;
  int train_sequences = 0;
  int val_sequences = 0;
};

namespace detail {

inline double mean_token_nll(const LmModel& m, const std::vector<std::vector<int>>& corpus) {
  double nll = 0.0;
  long count = 0;
  for (const std::vector<int>& ids : corpus) {
    if (ids.size() < 2) continue;
    ForwardResult f = lm_forward(m, ids);
    for (size_t t = 1; t < ids.size(); ++t) {
      nll -= f.logprobs(static_cast<int>(t) - 1, ids[t]);
      ++count;
    }
  }
  require(count > 0, errc::empty_corpus, "validation corpus has no predicted tokens");
  return nll / count;
}

}  // namespace detail

// Next-token cross-entropy pretraining (curriculum step 1). Mutates the
// model in place; deterministic given cfg.seed. Sequences are token-id
// sequences already wrapped in <bos>/<eos>.
inline TrainResult train_lm(LmModel& model, const std::vector<std::vector<int>>& corpus,
                            const TrainConfig& cfg) {
  require(!corpus.empty(), errc::empty_corpus, "training corpus is empty");
  require(cfg.steps >= 0 && cfg.batch_size > 0, errc::invalid_config,
          "steps must be >= 0 and batch_size positive");
  require(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0, errc::invalid_config,
          "val_fraction must lie in [0, 1)");
  for (const auto& ids : corpus)
    require(static_cast<int>(ids.size()) <= model.cfg.context, errc::prefix_too_long,
            "corpus sequence exceeds model context");

  // Deterministic split: shuffle a copy, carve off the tail for validation.
  std::vector<std::vector<int>> shuffled = corpus;
  Rng split_rng(derive_seed(cfg.seed, 0x5917));
  split_rng.shuffle(shuffled);
  size_t n_val = static_cast<size_t>(cfg.val_fraction * static_cast<double>(shuffled.size()));
  std::vector<std::vector<int>> train_set(shuffled.begin(), shuffled.end() - n_val);
  std::vector<std::vector<int>> val_set(shuffled.end() - n_val, shuffled.end());
  if (val_set.empty()) val_set = train_set;
  require(!train_set.empty(), errc::empty_corpus, "no training sequences after validation split");

  auto tensors = model.named_tensors();
  std::vector<Mat*> params;
  for (auto& [name, mat] : tensors) params.push_back(mat);
  Adam opt(params, cfg.lr);

  TrainResult result;
  result.train_sequences = static_cast<int>(train_set.size());
  result.val_sequences = static_cast<int>(val_set.size());
  const int val_every = cfg.val_every > 0 ? cfg.val_every : std::max(1, cfg.steps / 20);

  Rng order_rng(derive_seed(cfg.seed, 0x04de));
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  size_t cursor = order.size();  // forces a shuffle before the first batch

  for (int step = 0; step < cfg.steps; ++step) {
    Tape tape;
    ParamNodes pn = inject_params(tape, model);
    std::vector<Tape::NodeId> losses;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        order_rng.shuffle(order);
        cursor = 0;
      }
      const std::vector<int>& ids = train_set[order[cursor++]];
      if (ids.size() < 2) continue;
      TapeForwardOut f = lm_forward_tape(tape, model.cfg, pn, ids);
      std::vector<int> targets(ids.begin() + 1, ids.end());
      targets.push_back(-1);  // nothing to predict after the final token
      losses.push_back(tape.cross_entropy_mean(f.logits, std::move(targets)));
    }
    require(!losses.empty(), errc::empty_batch, "batch contained no trainable sequences");
    Tape::NodeId loss = tape.mean_scalars(losses);
    const double loss_value = tape.val(loss)(0, 0);
    require(std::isfinite(loss_value), errc::diverged_loss,
            "non-finite training loss at step " + std::to_string(step));
    result.curves.train.push_back(loss_value);
    tape.backward(loss);
    std::vector<const Mat*> grads;
    for (Tape::NodeId id : pn.ids) grads.push_back(&tape.grad(id));
    opt.step(grads);

    if ((step + 1) % val_every == 0 || step + 1 == cfg.steps) {
      const double vnll = detail::mean_token_nll(model, val_set);
      require(std::isfinite(vnll), errc::diverged_loss, "non-finite validation loss");
      result.curves.val.emplace_back(step + 1, vnll);
    }
  }
  result.final_val_ppl = std::exp(detail::mean_token_nll(model, val_set));
  return result;
}

}  // namespace fairgen
