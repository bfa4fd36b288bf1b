#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairgen/attribute_spec.hpp"
#include "fairgen/debias.hpp"
#include "fairgen/distribution.hpp"
#include "fairgen/encoder.hpp"
#include "fairgen/error.hpp"
#include "fairgen/fairness_metrics.hpp"
#include "fairgen/rng.hpp"
#include "fairgen/sentiment.hpp"
#include "fairgen/threadpool.hpp"
#include "fairgen/transformer.hpp"
#include "fairgen/vocab.hpp"

namespace fairgen {

struct EvalOptions {
  int n = 200;                 // samples per prefix (paper default: 1000)
  int max_tokens = 50;
  double temperature = 1.0;
  uint64_t seed = 0;
  double ss_threshold = 0.4;   // semantic-similarity cosine threshold
  std::optional<double> epsilon;
  int threads = 1;
  bool emit_samples = false;

  void validate() const {
    require(n > 0, errc::invalid_config, "samples per prefix must be positive");
    require(max_tokens > 0, errc::invalid_config, "max_tokens must be positive");
    require(temperature >= 0.0, errc::invalid_config, "temperature must be >= 0");
    require(threads >= 1, errc::invalid_config, "threads must be >= 1");
  }
};

namespace detail {

struct PrefixOutcome {
  int template_id = 0;
  std::string subgroup;
  std::vector<double> scores;       // one per continuation
  double semantic_similarity = 0.0;
  double mention_fraction = 0.0;
};

}  // namespace detail

// Full template evaluation: samples n continuations per enumerated prefix,
// scores them, and assembles the fairness report. Continuation j of every
// prefix of template m draws from the RNG stream (seed, m, j), which makes
// runs bit-reproducible regardless of thread count and gives counterfactual
// prefixes common random numbers — two prefixes that condition the model
// identically produce identical continuations, hence exactly zero W1.
inline FairnessReport evaluate_model(const LmModel& model, const Vocab& vocab,
                                     const AttributeSpec& spec,
                                     const std::vector<Template>& templates, const Scorer& scorer,
                                     const EvalOptions& opts,
                                     const std::vector<TokenSeq>* eval_corpus = nullptr) {
  opts.validate();
  const std::vector<EvalPrefix> prefixes = enumerate_eval_prefixes(templates, spec);
  const SentenceEncoder encoder(&model.tok_emb, &vocab);

  std::vector<detail::PrefixOutcome> outcomes(prefixes.size());
  parallel_for(static_cast<int>(prefixes.size()), opts.threads, [&](int pi) {
    const EvalPrefix& ep = prefixes[pi];
    try {
      const TokenSeq prefix_words = tokenize(ep.prefix);
      std::vector<int> ids;
      ids.reserve(prefix_words.size() + 1);
      ids.push_back(Vocab::kBos);
      for (int id : vocab.encode(prefix_words)) ids.push_back(id);
      const uint64_t stream = derive_seed(opts.seed, static_cast<uint64_t>(ep.template_id));
      const std::vector<std::vector<int>> conts =
          sample_continuations(model, ids, opts.n, opts.max_tokens, opts.temperature, stream);
      detail::PrefixOutcome& out = outcomes[pi];
      out.template_id = ep.template_id;
      out.subgroup = ep.subgroup;
      std::vector<TokenSeq> cont_words;
      cont_words.reserve(conts.size());
      for (const std::vector<int>& c : conts) cont_words.push_back(vocab.decode(c));
      out.scores.reserve(conts.size());
      for (const TokenSeq& words : cont_words) out.scores.push_back(scorer.score(words));
      out.semantic_similarity =
          semantic_similarity(prefix_words, cont_words, encoder, opts.ss_threshold);
      out.mention_fraction = fairgen::mention_fraction(ep.token, cont_words);
    } catch (const error& e) {
      // Attach the failing prefix so pipeline errors are actionable.
      raise(e.code(), std::string(e.what()) + " [prefix: \"" + ep.prefix + "\"]");
    }
  });

  // Pool scores per (template, subgroup value); token-level subgroups merge
  // all their tokens' prefixes.
  std::map<std::pair<int, std::string>, std::vector<double>> raw;
  std::map<std::string, std::vector<double>> by_subgroup;
  for (const detail::PrefixOutcome& out : outcomes) {
    auto& bucket = raw[{out.template_id, out.subgroup}];
    bucket.insert(bucket.end(), out.scores.begin(), out.scores.end());
    auto& pool = by_subgroup[out.subgroup];
    pool.insert(pool.end(), out.scores.begin(), out.scores.end());
  }

  TemplateValueDists dists;
  for (auto& [key, scores] : raw) dists.emplace(key, ScoreDistribution(scores));
  std::map<std::string, ScoreDistribution> group_dists;
  for (auto& [value, scores] : by_subgroup) group_dists.emplace(value, ScoreDistribution(scores));

  std::vector<int> template_ids;
  for (const Template& t : templates) template_ids.push_back(t.id);

  FairnessReport report;
  report.attribute = spec.name();
  report.individual_fairness =
      individual_fairness(dists, template_ids, spec.values(), &report.pairwise_w1);
  GroupFairnessResult gf = group_fairness(group_dists);
  report.group_fairness = gf.value;
  report.subgroup_w1 = gf.subgroup_w1;

  double ss = 0.0, mf = 0.0;
  for (const detail::PrefixOutcome& out : outcomes) {
    ss += out.semantic_similarity;
    mf += out.mention_fraction;
  }
  report.semantic_similarity = ss / static_cast<double>(outcomes.size());
  report.mention_fraction = mf / static_cast<double>(outcomes.size());

  if (eval_corpus != nullptr) {
    std::vector<std::vector<int>> ids;
    ids.reserve(eval_corpus->size());
    for (const TokenSeq& words : *eval_corpus) {
      std::vector<int> seq;
      seq.reserve(words.size() + 2);
      seq.push_back(Vocab::kBos);
      for (int id : vocab.encode(words)) seq.push_back(id);
      seq.push_back(Vocab::kEos);
      ids.push_back(std::move(seq));
    }
    report.ppl = perplexity(model, ids);
    report.ppl_subset = perplexity_subset(model, ids, *eval_corpus, spec.all_tokens());
  }

  if (opts.epsilon) report.apply_epsilon(*opts.epsilon);

  if (opts.emit_samples)
    for (const auto& [key, dist] : dists) report.samples.emplace(key, dist.samples());

  return report;
}

// Lambda sweep: each lambda debiases a fresh copy of the same base state
// with identical seeds, then evaluates. An empty lambda list yields an empty
// sweep.
inline std::vector<std::pair<double, FairnessReport>> sweep_lambda(
    const CurriculumState& base, const Vocab& vocab, const std::vector<TokenSeq>& train_corpus,
    const AttributeSpec& spec, const std::vector<Template>& templates, const Scorer& scorer,
    const DebiasConfig& base_cfg, const std::vector<double>& lambdas, const EvalOptions& opts,
    const std::vector<TokenSeq>* eval_corpus = nullptr) {
  std::vector<std::pair<double, FairnessReport>> out;
  for (double lambda : lambdas) {
    CurriculumState state = base;  // deep copy: every run starts identically
    DebiasConfig cfg = base_cfg;
    cfg.lambda = lambda;
    debias(state, vocab, train_corpus, spec, cfg);
    out.emplace_back(lambda,
                     evaluate_model(state.model, vocab, spec, templates, scorer, opts, eval_corpus));
  }
  return out;
}

}  // namespace fairgen
