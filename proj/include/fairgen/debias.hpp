#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fairgen/attribute_spec.hpp"
#include "fairgen/error.hpp"
#include "fairgen/sentiment_head.hpp"
#include "fairgen/tape.hpp"
#include "fairgen/train.hpp"
#include "fairgen/transformer.hpp"
#include "fairgen/vocab.hpp"

namespace fairgen {

// ---------------------------------------------------------------------------
// Configuration and curriculum state
// ---------------------------------------------------------------------------

enum class DebiasMethod { embedding_reg, sentiment_reg };

inline std::string to_string(DebiasMethod m) {
  return m == DebiasMethod::embedding_reg ? "embedding_reg" : "sentiment_reg";
}

inline DebiasMethod debias_method_from_string(const std::string& s) {
  if (s == "embedding_reg") return DebiasMethod::embedding_reg;
  if (s == "sentiment_reg") return DebiasMethod::sentiment_reg;
  raise(errc::invalid_config, "unknown debias method '" + s + "'");
}

struct DebiasConfig {
  DebiasMethod method = DebiasMethod::embedding_reg;
  double lambda = 0.0;
  int steps = 0;
  double lr = 1e-4;
  uint64_t seed = 0;  // drives both the sequence order and counterfactual draws

  void validate() const {
    require(lambda >= 0.0, errc::invalid_config, "lambda must be >= 0");
    require(steps >= 0, errc::invalid_config, "steps must be >= 0");
  }
};

enum class CurriculumStage { pretrained, head_trained, debiased };

inline std::string to_string(CurriculumStage s) {
  switch (s) {
    case CurriculumStage::pretrained: return "pretrained";
    case CurriculumStage::head_trained: return "head_trained";
    default: return "debiased";
  }
}

inline CurriculumStage curriculum_stage_from_string(const std::string& s) {
  if (s == "pretrained") return CurriculumStage::pretrained;
  if (s == "head_trained") return CurriculumStage::head_trained;
  if (s == "debiased") return CurriculumStage::debiased;
  raise(errc::invalid_config, "unknown curriculum stage '" + s + "'");
}

// Model + optional head + where they are in the three-step curriculum.
// Provenance accumulates the config and seeds of each completed stage.
struct CurriculumState {
  CurriculumStage stage = CurriculumStage::pretrained;
  LmModel model;
  std::optional<SentimentHead> head;
  nlohmann::json provenance = nlohmann::json::object();

  void validate() const {
    require(head.has_value() == (stage != CurriculumStage::pretrained), errc::invalid_config,
            "head must be present exactly from stage head_trained onward");
  }
};

// ---------------------------------------------------------------------------
// Fairness losses (plain-value forms, used by probes and tests)
// ---------------------------------------------------------------------------

inline double cosine_distance_value(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), errc::invalid_config, "cosine distance dimension mismatch");
  const int n = static_cast<int>(u.size());
  const double uu = dot(u.data(), u.data(), n);
  const double vv = dot(v.data(), v.data(), n);
  require(uu >= 1e-24 && vv >= 1e-24, errc::zero_vector,
          "cosine distance of a (near-)zero vector is undefined");
  // sqrt(uu * vv) rather than sqrt(uu) * sqrt(vv): for u == v the ratio is
  // then exactly 1 and the distance exactly 0.
  return 1.0 - dot(u.data(), v.data(), n) / std::sqrt(uu * vv);
}

// Cosine distance between h-bar of a prefix and of its counterfactual.
inline double embedding_reg_loss(std::span<const double> h_orig, std::span<const double> h_cf) {
  return cosine_distance_value(h_orig, h_cf);
}

// Cosine distance between the frozen head's 128-wide projections.
inline double sentiment_reg_loss(const SentimentHead& head, std::span<const double> h_orig,
                                 std::span<const double> h_cf) {
  return cosine_distance_value(head.projection(h_orig), head.projection(h_cf));
}

// ---------------------------------------------------------------------------
// Step-3 dataset
// ---------------------------------------------------------------------------

struct DebiasInstance {
  int position = 0;      // word index of the sensitive token
  std::string value;     // its subgroup value
};

struct DebiasSequence {
  TokenSeq words;
  std::vector<DebiasInstance> instances;
};

// Every corpus position holding a sensitive token becomes one instance;
// sequences without any contribute nothing.
inline std::vector<DebiasSequence> debias_step_dataset(const std::vector<TokenSeq>& corpus,
                                                       const AttributeSpec& spec) {
  std::vector<DebiasSequence> out;
  for (const TokenSeq& words : corpus) {
    DebiasSequence seq;
    for (size_t p = 0; p < words.size(); ++p) {
      if (const SubgroupSpec* sg = spec.subgroup_of_token(words[p]))
        seq.instances.push_back(DebiasInstance{static_cast<int>(p), sg->value});
    }
    if (seq.instances.empty()) continue;
    seq.words = words;
    out.push_back(std::move(seq));
  }
  require(!out.empty(), errc::no_sensitive_sequences,
          "corpus contains no sensitive tokens of the attribute");
  return out;
}

// ---------------------------------------------------------------------------
// The debias op (curriculum step 3)
// ---------------------------------------------------------------------------

struct DebiasStepMetrics {
  int step = 0;
  double lm_loss = 0.0;
  double fairness_loss = 0.0;  // mean over the sequence's instances (0 when lambda == 0)
  double total_loss = 0.0;
};

struct DebiasResult {
  std::vector<DebiasStepMetrics> metrics;
};

namespace detail {

// Counterfactual prefix of `words` up to and including `position`: the
// sensitive token there and every other token of the same subgroup at or
// before it are replaced by their phi(to) counterparts.
inline TokenSeq counterfactual_prefix(const TokenSeq& words, int position,
                                      const AttributeSpec& spec, const SubgroupSpec& from,
                                      const SubgroupSpec& to) {
  TokenSeq out(words.begin(), words.begin() + position + 1);
  for (std::string& tok : out) {
    if (const SubgroupSpec* sg = spec.subgroup_of_token(tok); sg && sg->value == from.value)
      tok = spec.counterfactual_token(tok, from, to);
  }
  return out;
}

}  // namespace detail

// Fine-tunes state.model with L = L_LM + lambda * L_fairness over the
// sensitive subset of the corpus, one sequence per step. For every sensitive
// position i a counterfactual subgroup is drawn uniformly from the other
// subgroups, and the cosine penalty couples h-bar (or its frozen-head
// projection) at position i of the original and counterfactual prefixes.
// Gradients flow through both forward passes; the head is never updated.
// Deterministic given cfg.seed. Advances the state to stage `debiased` and
// returns a per-step metrics log.
//
// The sequence-order and counterfactual-draw RNG streams are separate, so a
// lambda = 0 run (which skips the draws entirely) walks the same sequence
// stream as plain fine-tuning and matches it bit for bit.
inline DebiasResult debias(CurriculumState& state, const Vocab& vocab,
                           const std::vector<TokenSeq>& corpus, const AttributeSpec& spec,
                           const DebiasConfig& cfg) {
  cfg.validate();
  state.validate();
  if (cfg.method == DebiasMethod::sentiment_reg)
    require(state.stage != CurriculumStage::pretrained, errc::invalid_config,
            "sentiment regularization needs a trained head (curriculum step 2)");
  for (const std::string& tok : spec.all_tokens())
    require(vocab.contains(tok), errc::invalid_config,
            "attribute token '" + tok + "' missing from the model vocabulary");

  std::vector<DebiasSequence> dataset = debias_step_dataset(corpus, spec);

  LmModel& model = state.model;
  auto tensors = model.named_tensors();
  std::vector<Mat*> params;
  for (auto& [name, mat] : tensors) params.push_back(mat);
  Adam opt(params, cfg.lr);

  Rng order_rng(derive_seed(cfg.seed, 1));
  Rng cf_rng(derive_seed(cfg.seed, 2));

  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  size_t cursor = order.size();

  DebiasResult result;
  for (int step = 0; step < cfg.steps; ++step) {
    if (cursor >= order.size()) {
      order_rng.shuffle(order);
      cursor = 0;
    }
    const DebiasSequence& seq = dataset[order[cursor++]];

    std::vector<int> full_ids;
    full_ids.reserve(seq.words.size() + 2);
    full_ids.push_back(Vocab::kBos);
    for (int id : vocab.encode(seq.words)) full_ids.push_back(id);
    full_ids.push_back(Vocab::kEos);
    require(static_cast<int>(full_ids.size()) <= model.cfg.context, errc::prefix_too_long,
            "debias sequence exceeds model context");

    Tape tape;
    ParamNodes pn = inject_params(tape, model);
    TapeForwardOut f = lm_forward_tape(tape, model.cfg, pn, full_ids);
    std::vector<int> targets(full_ids.begin() + 1, full_ids.end());
    targets.push_back(-1);
    Tape::NodeId lm_loss = tape.cross_entropy_mean(f.logits, std::move(targets));

    Tape::NodeId total = lm_loss;
    double fairness_value = 0.0;
    if (cfg.lambda > 0.0) {
      std::optional<HeadParamNodes> head_pn;
      if (cfg.method == DebiasMethod::sentiment_reg)
        head_pn = inject_head_params(tape, *state.head);
      std::vector<Tape::NodeId> penalties;
      for (const DebiasInstance& inst : seq.instances) {
        const SubgroupSpec& from = spec.subgroup(inst.value);
        // Uniform draw over the other subgroups.
        const auto& subs = spec.subgroups();
        size_t pick = cf_rng.uniform_index(subs.size() - 1);
        size_t from_idx = 0;
        while (subs[from_idx].value != from.value) ++from_idx;
        const SubgroupSpec& to = subs[pick >= from_idx ? pick + 1 : pick];

        TokenSeq cf_words =
            detail::counterfactual_prefix(seq.words, inst.position, spec, from, to);
        std::vector<int> orig_ids(full_ids.begin(), full_ids.begin() + inst.position + 2);
        std::vector<int> cf_ids;
        cf_ids.reserve(cf_words.size() + 1);
        cf_ids.push_back(Vocab::kBos);
        for (int id : vocab.encode(cf_words)) cf_ids.push_back(id);

        // h-bar at the sensitive position (shifted by one for <bos>).
        const int hpos = inst.position + 1;
        TapeForwardOut f_orig = lm_forward_tape(tape, model.cfg, pn, orig_ids);
        TapeForwardOut f_cf = lm_forward_tape(tape, model.cfg, pn, cf_ids);
        Tape::NodeId h_orig = h_bar_tape(tape, f_orig, hpos);
        Tape::NodeId h_cf = h_bar_tape(tape, f_cf, hpos);
        if (cfg.method == DebiasMethod::embedding_reg) {
          penalties.push_back(tape.cosine_distance(h_orig, h_cf));
        } else {
          penalties.push_back(
              tape.cosine_distance(head_projection_tape(tape, *head_pn, h_orig),
                                   head_projection_tape(tape, *head_pn, h_cf)));
        }
      }
      Tape::NodeId fairness = tape.mean_scalars(penalties);
      fairness_value = tape.val(fairness)(0, 0);
      total = tape.add(lm_loss, tape.scale(fairness, cfg.lambda));
    }

    const double lm_value = tape.val(lm_loss)(0, 0);
    const double total_value = tape.val(total)(0, 0);
    require(std::isfinite(total_value), errc::diverged_loss,
            "non-finite debias loss at step " + std::to_string(step));
    result.metrics.push_back(DebiasStepMetrics{step, lm_value, fairness_value, total_value});

    tape.backward(total);
    std::vector<const Mat*> grads;
    for (Tape::NodeId id : pn.ids) grads.push_back(&tape.grad(id));
    opt.step(grads);  // model parameters only: the head stays frozen
  }

  state.stage = CurriculumStage::debiased;
  state.provenance["debias"] = {{"method", to_string(cfg.method)}, {"lambda", cfg.lambda},
                                {"steps", cfg.steps},              {"lr", cfg.lr},
                                {"seed", cfg.seed}};
  return result;
}

}  // namespace fairgen
