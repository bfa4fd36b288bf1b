// Acceptance gate for the fairgen toolkit. Each criterion prints exactly one
// [PASS]/[FAIL] line; the binary exits nonzero if any criterion failed.
//
// The checks are deliberately oracle-driven: closed-form reductions, grid /
// Monte-Carlo integration, finite differences, and a hand-rolled logistic
// regression — never the library computing both sides of its own equality.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fairgen/attribute_spec.hpp"
#include "fairgen/debias.hpp"
#include "fairgen/distribution.hpp"
#include "fairgen/evaluate.hpp"
#include "fairgen/fairness_metrics.hpp"
#include "fairgen/planted_corpus.hpp"
#include "fairgen/report_io.hpp"
#include "fairgen/rng.hpp"
#include "fairgen/sentiment.hpp"
#include "fairgen/sentiment_head.hpp"
#include "fairgen/tape.hpp"
#include "fairgen/train.hpp"
#include "fairgen/transformer.hpp"
#include "fairgen/vocab.hpp"
#include "fairgen/wasserstein.hpp"

namespace {

using namespace fairgen;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Criterion 1: exact W1 vs dense grid integration of |F_p - F_q|
// ---------------------------------------------------------------------------

// Midpoint-rule integral of |F_p - F_q| over [0,1] with one million cells,
// computed by a two-pointer walk along the sorted samples.
double grid_w1(const std::vector<double>& a, const std::vector<double>& b) {
  constexpr int kCells = 1'000'000;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double acc = 0.0;
  for (int k = 0; k < kCells; ++k) {
    const double tau = (k + 0.5) / kCells;
    while (ia < a.size() && a[ia] <= tau) ++ia;
    while (ib < b.size() && b[ib] <= tau) ++ib;
    acc += std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb);
  }
  return acc / kCells;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  Rng rng(20260101);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(rng.uniform_index(12) + 1);
    std::vector<double> b(rng.uniform_index(12) + 1);
    for (double& v : a) v = rng.uniform();
    for (double& v : b) v = rng.uniform();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double exact = wasserstein1(ScoreDistribution(a), ScoreDistribution(b));
    worst = std::max(worst, std::abs(exact - grid_w1(a, b)));
  }
  const double elapsed = seconds_since(t0);
  const bool pass = worst <= 1e-6 && elapsed < 10.0;
  return {pass, "max |exact - grid| = " + fmt(worst) + " over 1000 pairs in " + fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------
// Criterion 2: W1 equals the mean demographic disparity over uniform tau
// ---------------------------------------------------------------------------

Outcome criterion2() {
  Rng rng(20260202);
  constexpr int kDraws = 100000;
  double worst_sigmas = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(rng.uniform_index(12) + 1);
    std::vector<double> b(rng.uniform_index(12) + 1);
    for (double& v : a) v = rng.uniform();
    for (double& v : b) v = rng.uniform();
    const ScoreDistribution p(a), q(b);
    const double w1 = wasserstein1(p, q);

    double mean = 0.0, m2 = 0.0;  // Welford running moments
    for (int i = 0; i < kDraws; ++i) {
      const double d = demographic_disparity(p, q, rng.uniform());
      const double delta = d - mean;
      mean += delta / (i + 1);
      m2 += delta * (d - mean);
    }
    const double se = std::sqrt(m2 / kDraws / kDraws);
    const double sigmas = std::abs(mean - w1) / std::max(se, 1e-12);
    worst_sigmas = std::max(worst_sigmas, sigmas);
  }
  return {worst_sigmas <= 3.0,
          "worst |MC - W1| = " + fmt(worst_sigmas) + " standard errors (50 pairs, 1e5 draws each)"};
}

// ---------------------------------------------------------------------------
// Criterion 3: metric reductions and the truncated-Gaussian bracket
// ---------------------------------------------------------------------------

std::vector<double> truncated_gaussian(double mu, double sigma, int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  while (static_cast<int>(out.size()) < n) {
    const double x = mu + sigma * rng.normal();
    if (x >= 0.0 && x <= 1.0) out.push_back(x);
  }
  return out;
}

Outcome criterion3() {
  Rng rng(20260303);
  std::vector<double> a(9), b(6);
  for (double& v : a) v = rng.uniform();
  for (double& v : b) v = rng.uniform();
  const ScoreDistribution da(a), db(b);

  // M = 1, |A| = 2: individual fairness must equal the single pairwise W1.
  TemplateValueDists dists;
  dists.emplace(std::make_pair(0, std::string("A")), da);
  dists.emplace(std::make_pair(0, std::string("B")), db);
  const double ifv = individual_fairness(dists, {0}, {"A", "B"});
  if (ifv != wasserstein1(da, db))
    return {false, "I.F. with one template and two values != the pairwise W1"};

  // Identical subgroups: group fairness must be exactly zero.
  std::map<std::string, ScoreDistribution> same{{"A", da}, {"B", da}};
  const GroupFairnessResult gf = group_fairness(same);
  if (gf.value != 0.0) return {false, "G.F. over identical subgroups = " + fmt(gf.value) + " != 0"};

  // Two truncated-Gaussian pairs whose W1 brackets 0.1 and 0.01 within 20%.
  const int n = 100000;
  const double w_big = wasserstein1(ScoreDistribution(truncated_gaussian(0.45, 0.1, n, 31)),
                                    ScoreDistribution(truncated_gaussian(0.55, 0.1, n, 32)));
  const double w_small = wasserstein1(ScoreDistribution(truncated_gaussian(0.495, 0.1, n, 33)),
                                      ScoreDistribution(truncated_gaussian(0.505, 0.1, n, 34)));
  const bool big_ok = std::abs(w_big / 0.1 - 1.0) <= 0.2;
  const bool small_ok = std::abs(w_small / 0.01 - 1.0) <= 0.2;
  return {big_ok && small_ok,
          "reductions exact; truncated-Gaussian W1 = " + fmt(w_big) + " (target 0.1), " +
              fmt(w_small) + " (target 0.01)"};
}

// ---------------------------------------------------------------------------
// Criterion 4: lexicon scorer closed forms
// ---------------------------------------------------------------------------

Outcome criterion4() {
  const Lexicon& lex = builtin_test_lexicon();
  const Lexicon flipped = lex.flipped();

  if (lexicon_score({"the", "train", "arrived"}, lex) != 0.5)
    return {false, "text without opinion words must score exactly 0.5"};
  if (lexicon_score({"good"}, lex) != 1.0) return {false, "single positive word must score 1.0"};
  if (lexicon_score({"Good", "day"}, lex) != 1.0)
    return {false, "matching must be case-insensitive"};
  if (lexicon_score({"awful"}, lex) != 0.0) return {false, "single negative word must score 0.0"};
  if (lexicon_score({"good", "bad"}, lex) != 0.5)
    return {false, "one positive + one negative must score exactly 0.5"};
  if (lexicon_score({"good", "great", "bad"}, lex) != 2.0 / 3.0)
    return {false, "two positive + one negative must score exactly 2/3"};

  // Polarity-flip symmetry: scoring under the flipped lexicon mirrors the
  // score around 1/2 for any text.
  const std::vector<TokenSeq> texts = {{"good", "great", "bad"},
                                       {"kind", "cruel", "cruel", "day"},
                                       {"wonderful"},
                                       {"no", "opinion", "here"}};
  for (const TokenSeq& t : texts) {
    const double s = lexicon_score(t, lex);
    const double sf = lexicon_score(t, flipped);
    if (std::abs(s + sf - 1.0) > 1e-12)
      return {false, "polarity flip must mirror the score around 0.5"};
  }
  return {true, "p/(p+n) cases, the no-opinion fallback, and flip symmetry all exact"};
}

// ---------------------------------------------------------------------------
// Criterion 5: finite differences for the LM loss and both fairness losses
// ---------------------------------------------------------------------------

struct FdSetup {
  AttributeSpec spec{"name",
                     {SubgroupSpec{"A", {"alice"}, PronounClass::neutral},
                      SubgroupSpec{"B", {"bob"}, PronounClass::neutral}}};
  TokenSeq words{"alice", "met", "bob", "today", "."};
  Vocab vocab;
  LmModel model;
  SentimentHead head;
  std::vector<int> full_ids;

  FdSetup() {
    vocab = Vocab::build({words}, spec.all_tokens());
    LmConfig cfg;
    cfg.layers = 2;
    cfg.d_model = 8;
    cfg.heads = 2;
    cfg.context = 16;
    cfg.vocab = static_cast<int>(vocab.size());
    model = LmModel::init(cfg, 5);
    head = SentimentHead::init(cfg.d_model, 5);
    full_ids.push_back(Vocab::kBos);
    for (int id : vocab.encode(words)) full_ids.push_back(id);
    full_ids.push_back(Vocab::kEos);
  }
};

double ce_value(const LmModel& m, const std::vector<int>& ids) {
  const ForwardResult f = lm_forward(m, ids);
  double nll = 0.0;
  for (std::size_t t = 1; t < ids.size(); ++t) nll -= f.logprobs(static_cast<int>(t) - 1, ids[t]);
  return nll / static_cast<double>(ids.size() - 1);
}

// Plain-path value of the fairness penalty for one counterfactual pair.
double penalty_value(const FdSetup& s, DebiasMethod method) {
  const int position = 2;  // "bob"
  const SubgroupSpec& from = s.spec.subgroup("B");
  const SubgroupSpec& to = s.spec.subgroup("A");
  const TokenSeq cf_words = detail::counterfactual_prefix(s.words, position, s.spec, from, to);

  std::vector<int> orig_ids(s.full_ids.begin(), s.full_ids.begin() + position + 2);
  std::vector<int> cf_ids{Vocab::kBos};
  for (int id : s.vocab.encode(cf_words)) cf_ids.push_back(id);

  const ForwardResult fo = lm_forward(s.model, orig_ids);
  const ForwardResult fc = lm_forward(s.model, cf_ids);
  const std::vector<double> ho = h_bar(fo.stack, position + 1);
  const std::vector<double> hc = h_bar(fc.stack, position + 1);
  return method == DebiasMethod::embedding_reg ? embedding_reg_loss(ho, hc)
                                               : sentiment_reg_loss(s.head, ho, hc);
}

// Tape gradients of the same penalty with respect to every model tensor.
std::vector<Mat> penalty_gradients(FdSetup& s, DebiasMethod method) {
  const int position = 2;
  const SubgroupSpec& from = s.spec.subgroup("B");
  const SubgroupSpec& to = s.spec.subgroup("A");
  const TokenSeq cf_words = detail::counterfactual_prefix(s.words, position, s.spec, from, to);

  std::vector<int> orig_ids(s.full_ids.begin(), s.full_ids.begin() + position + 2);
  std::vector<int> cf_ids{Vocab::kBos};
  for (int id : s.vocab.encode(cf_words)) cf_ids.push_back(id);

  Tape tape;
  ParamNodes pn = inject_params(tape, s.model);
  TapeForwardOut fo = lm_forward_tape(tape, s.model.cfg, pn, orig_ids);
  TapeForwardOut fc = lm_forward_tape(tape, s.model.cfg, pn, cf_ids);
  Tape::NodeId ho = h_bar_tape(tape, fo, position + 1);
  Tape::NodeId hc = h_bar_tape(tape, fc, position + 1);
  Tape::NodeId loss;
  if (method == DebiasMethod::embedding_reg) {
    loss = tape.cosine_distance(ho, hc);
  } else {
    HeadParamNodes hp = inject_head_params(tape, s.head);
    loss = tape.cosine_distance(head_projection_tape(tape, hp, ho),
                                head_projection_tape(tape, hp, hc));
  }
  tape.backward(loss);
  std::vector<Mat> grads;
  for (Tape::NodeId id : pn.ids) grads.push_back(tape.grad(id));
  return grads;
}

// Fourth-order finite differences over every element of every model tensor.
double max_rel_error(FdSetup& s, const std::vector<Mat>& analytic,
                     const std::function<double()>& value) {
  constexpr double h = 1e-4;
  auto tensors = s.model.named_tensors();
  double worst = 0.0;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    Mat& m = *tensors[t].second;
    for (std::size_t i = 0; i < m.data.size(); ++i) {
      const double keep = m.data[i];
      auto at = [&](double x) {
        m.data[i] = x;
        return value();
      };
      const double fd =
          (8.0 * (at(keep + h) - at(keep - h)) - (at(keep + 2.0 * h) - at(keep - 2.0 * h))) /
          (12.0 * h);
      m.data[i] = keep;
      const double an = analytic[t].data[i];
      if (std::abs(an) < 1e-10 && std::abs(fd) < 1e-7) continue;
      worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8}));
    }
  }
  return worst;
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  FdSetup s;

  // LM cross-entropy.
  std::vector<Mat> ce_grads;
  {
    Tape tape;
    ParamNodes pn = inject_params(tape, s.model);
    TapeForwardOut f = lm_forward_tape(tape, s.model.cfg, pn, s.full_ids);
    std::vector<int> targets(s.full_ids.begin() + 1, s.full_ids.end());
    targets.push_back(-1);
    Tape::NodeId loss = tape.cross_entropy_mean(f.logits, std::move(targets));
    tape.backward(loss);
    for (Tape::NodeId id : pn.ids) ce_grads.push_back(tape.grad(id));
  }
  const double ce_err = max_rel_error(s, ce_grads, [&] { return ce_value(s.model, s.full_ids); });

  std::vector<Mat> emb_grads = penalty_gradients(s, DebiasMethod::embedding_reg);
  const double emb_err =
      max_rel_error(s, emb_grads, [&] { return penalty_value(s, DebiasMethod::embedding_reg); });

  std::vector<Mat> sent_grads = penalty_gradients(s, DebiasMethod::sentiment_reg);
  const double sent_err =
      max_rel_error(s, sent_grads, [&] { return penalty_value(s, DebiasMethod::sentiment_reg); });

  const double elapsed = seconds_since(t0);
  const double worst = std::max({ce_err, emb_err, sent_err});
  const bool pass = worst < 1e-3 && elapsed < 60.0;
  return {pass, "max rel err: CE " + fmt(ce_err) + ", embedding-reg " + fmt(emb_err) +
                    ", sentiment-reg " + fmt(sent_err) + " in " + fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------
// Criteria 6 and 7: the planted-bias pipeline, shared between both
// ---------------------------------------------------------------------------

struct PipelineRun {
  double individual_fairness = 0.0;
  double semantic_similarity = 0.0;
  double ppl = 0.0;
};

struct PlantedPipeline {
  AttributeSpec spec{"name",
                     {SubgroupSpec{"A", {"alice"}, PronounClass::neutral},
                      SubgroupSpec{"B", {"bob"}, PronounClass::neutral}}};
  Lexicon lex = builtin_test_lexicon();
  LexiconScorer scorer{lex};
  std::vector<Template> templates{{0, "<name> is"},
                                  {1, "<name> is very"},
                                  {2, "the <name> is"},
                                  {3, "<name> was"},
                                  {4, "people say <name> is"}};
  std::vector<TokenSeq> train_corpus, eval_corpus;
  Vocab vocab;
  std::vector<std::vector<int>> eval_ids;
  CurriculumState base;
  EvalOptions eopts;
  DebiasConfig debias_base;
  PipelineRun baseline;
  double build_seconds = 0.0;
  std::map<std::pair<std::string, double>, PipelineRun> runs;

  PlantedPipeline() {
    const auto t0 = Clock::now();

    PlantedBiasConfig gen;
    gen.positive_prob = {{"A", 0.9}, {"B", 0.1}};
    // Filler sentences are omitted: debiasing fine-tunes on the sensitive
    // subset only, so filler-heavy corpora would show a perplexity drift that
    // has nothing to do with the fairness penalty.
    gen.filler_fraction = 0.0;
    gen.sentences = 600;
    gen.seed = 101;
    train_corpus = generate_planted_corpus(gen, spec, lex);
    gen.sentences = 200;
    gen.seed = 202;
    eval_corpus = generate_planted_corpus(gen, spec, lex);

    vocab = Vocab::build(train_corpus, spec.all_tokens());
    for (const TokenSeq& words : eval_corpus) eval_ids.push_back(encode(words));

    LmConfig cfg;
    cfg.layers = 2;
    cfg.d_model = 32;
    cfg.heads = 2;
    cfg.context = 16;
    cfg.vocab = static_cast<int>(vocab.size());
    base.model = LmModel::init(cfg, 7);

    std::vector<std::vector<int>> train_ids;
    for (const TokenSeq& words : train_corpus) train_ids.push_back(encode(words));
    TrainConfig tcfg;
    tcfg.steps = 600;
    tcfg.batch_size = 8;
    tcfg.lr = 3e-3;
    tcfg.seed = 7;
    tcfg.val_fraction = 0.1;
    train_lm(base.model, train_ids, tcfg);

    auto head_data = build_head_dataset(train_corpus, base.model, vocab, lex, 0.8, 0.2, 1);
    base.head = SentimentHead::init(cfg.d_model, 7);
    HeadTrainConfig hcfg;
    hcfg.steps = 300;
    hcfg.batch_size = 32;
    hcfg.lr = 1e-2;
    hcfg.seed = 7;
    train_sentiment_head(*base.head, head_data, hcfg);
    base.stage = CurriculumStage::head_trained;

    eopts.n = 120;
    eopts.max_tokens = 10;
    eopts.temperature = 1.0;
    eopts.seed = 4242;
    eopts.threads = 1;

    // Debiasing works in a brief aggressive fine-tune: the penalty pulls the
    // subgroup embeddings together faster than the unregularized loss can
    // rebuild the planted association, after which perplexity recovers while
    // the merged embeddings keep counterfactual pairs indistinguishable.
    debias_base.steps = 500;
    debias_base.lr = 1e-2;
    debias_base.seed = 13;

    baseline = measure(base.model);
    build_seconds = seconds_since(t0);
  }

  std::vector<int> encode(const TokenSeq& words) const {
    std::vector<int> ids{Vocab::kBos};
    for (int id : vocab.encode(words)) ids.push_back(id);
    ids.push_back(Vocab::kEos);
    return ids;
  }

  PipelineRun measure(const LmModel& model) const {
    const FairnessReport r = evaluate_model(model, vocab, spec, templates, scorer, eopts);
    return {r.individual_fairness, r.semantic_similarity, perplexity(model, eval_ids)};
  }

  // Debias a deep copy of the curriculum state and evaluate it. A lambda of
  // zero runs plain fine-tuning, so it is shared between the two methods.
  const PipelineRun& run(DebiasMethod method, double lambda) {
    const std::string key_method = lambda == 0.0 ? "-" : to_string(method);
    const auto key = std::make_pair(key_method, lambda);
    auto it = runs.find(key);
    if (it == runs.end()) {
      CurriculumState state = base;
      DebiasConfig cfg = debias_base;
      cfg.method = method;
      cfg.lambda = lambda;
      debias(state, vocab, train_corpus, spec, cfg);
      it = runs.emplace(key, measure(state.model)).first;
    }
    return it->second;
  }
};

Outcome criterion6(PlantedPipeline& p, double pipeline_seconds) {
  std::vector<std::string> problems;
  if (!(p.baseline.individual_fairness > 0.05))
    problems.push_back("baseline I.F. = " + fmt(p.baseline.individual_fairness) + " <= 0.05");

  for (double lambda : {1.0, 10.0, 100.0}) {
    p.run(DebiasMethod::sentiment_reg, lambda);
    p.run(DebiasMethod::embedding_reg, lambda);
  }
  const PipelineRun& sent = p.run(DebiasMethod::sentiment_reg, 100.0);
  const PipelineRun& emb = p.run(DebiasMethod::embedding_reg, 100.0);

  if (!(sent.individual_fairness <= 0.5 * p.baseline.individual_fairness))
    problems.push_back("sentiment-reg I.F. " + fmt(sent.individual_fairness) + " not half of " +
                       fmt(p.baseline.individual_fairness));
  if (!(sent.ppl <= 1.20 * p.baseline.ppl))
    problems.push_back("sentiment-reg PPL " + fmt(sent.ppl) + " > 1.2 x " + fmt(p.baseline.ppl));
  if (!(emb.individual_fairness <= 0.5 * p.baseline.individual_fairness))
    problems.push_back("embedding-reg I.F. " + fmt(emb.individual_fairness) + " not half of " +
                       fmt(p.baseline.individual_fairness));
  if (!(emb.ppl <= 1.25 * p.baseline.ppl))
    problems.push_back("embedding-reg PPL " + fmt(emb.ppl) + " > 1.25 x " + fmt(p.baseline.ppl));
  if (!(pipeline_seconds < 900.0))
    problems.push_back("pipeline took " + fmt(pipeline_seconds) + " s");

  if (!problems.empty()) {
    std::string joined;
    for (const std::string& s : problems) joined += (joined.empty() ? "" : "; ") + s;
    return {false, joined};
  }
  return {true, "baseline I.F. " + fmt(p.baseline.individual_fairness) + "; at lambda=100 I.F. " +
                    fmt(sent.individual_fairness) + " (sent) / " + fmt(emb.individual_fairness) +
                    " (emb), PPL " + fmt(p.baseline.ppl) + " -> " + fmt(sent.ppl) + " / " +
                    fmt(emb.ppl) + ", " + fmt(pipeline_seconds) + " s"};
}

Outcome criterion7(PlantedPipeline& p) {
  const PipelineRun& zero = p.run(DebiasMethod::embedding_reg, 0.0);
  std::vector<std::string> problems;
  for (DebiasMethod method : {DebiasMethod::sentiment_reg, DebiasMethod::embedding_reg}) {
    p.run(method, 1.0);
    const PipelineRun& hi = p.run(method, 100.0);
    if (!(hi.individual_fairness < zero.individual_fairness))
      problems.push_back(to_string(method) + " I.F.(100) = " + fmt(hi.individual_fairness) +
                         " !< I.F.(0) = " + fmt(zero.individual_fairness));
    if (!(hi.semantic_similarity <= zero.semantic_similarity))
      problems.push_back(to_string(method) + " S.S.(100) = " + fmt(hi.semantic_similarity) +
                         " > S.S.(0) = " + fmt(zero.semantic_similarity));
  }
  if (!problems.empty()) {
    std::string joined;
    for (const std::string& s : problems) joined += (joined.empty() ? "" : "; ") + s;
    return {false, joined};
  }
  const PipelineRun& sent_hi = p.run(DebiasMethod::sentiment_reg, 100.0);
  const PipelineRun& emb_hi = p.run(DebiasMethod::embedding_reg, 100.0);
  return {true, "I.F. " + fmt(zero.individual_fairness) + " (lambda=0) -> " +
                    fmt(sent_hi.individual_fairness) + " (sent) / " +
                    fmt(emb_hi.individual_fairness) + " (emb); S.S. " +
                    fmt(zero.semantic_similarity) + " -> " + fmt(sent_hi.semantic_similarity) +
                    " / " + fmt(emb_hi.semantic_similarity)};
}

// ---------------------------------------------------------------------------
// Criterion 8: sentiment head vs a hand-rolled logistic-regression oracle
// ---------------------------------------------------------------------------

std::vector<HeadExample> separable_examples(int n, int dim, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(dim);
  for (double& v : w) v = rng.normal();
  std::vector<HeadExample> out;
  while (static_cast<int>(out.size()) < n) {
    std::vector<double> x(dim);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    double margin = 0.0;
    for (int i = 0; i < dim; ++i) margin += w[i] * x[i];
    if (std::abs(margin) < 0.5) continue;  // enforce a separation margin
    out.push_back(HeadExample{std::move(x), margin > 0.0 ? 1 : 0});
  }
  return out;
}

double logistic_regression_accuracy(const std::vector<HeadExample>& train,
                                    const std::vector<HeadExample>& test) {
  const int dim = static_cast<int>(train.front().feature.size());
  std::vector<double> w(dim + 1, 0.0);  // last entry is the bias
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<double> grad(dim + 1, 0.0);
    for (const HeadExample& ex : train) {
      double z = w[dim];
      for (int i = 0; i < dim; ++i) z += w[i] * ex.feature[i];
      const double err = 1.0 / (1.0 + std::exp(-z)) - ex.label;
      for (int i = 0; i < dim; ++i) grad[i] += err * ex.feature[i];
      grad[dim] += err;
    }
    for (int i = 0; i <= dim; ++i) w[i] -= 0.5 * grad[i] / static_cast<double>(train.size());
  }
  int correct = 0;
  for (const HeadExample& ex : test) {
    double z = w[dim];
    for (int i = 0; i < dim; ++i) z += w[i] * ex.feature[i];
    correct += ((z > 0.0 ? 1 : 0) == ex.label) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

Outcome criterion8() {
  const auto data = separable_examples(400, 8, 88);
  SentimentHead head = SentimentHead::init(8, 99);
  HeadTrainConfig cfg;
  cfg.steps = 300;
  cfg.batch_size = 32;
  cfg.lr = 1e-2;
  cfg.seed = 99;
  cfg.holdout_fraction = 0.2;
  const HeadTrainResult res = train_sentiment_head(head, data, cfg);

  const std::vector<HeadExample> oracle_train(data.begin(), data.begin() + 320);
  const std::vector<HeadExample> oracle_test(data.begin() + 320, data.end());
  const double oracle_acc = logistic_regression_accuracy(oracle_train, oracle_test);

  const bool pass = res.holdout_accuracy > 0.95 && oracle_acc > 0.95;
  return {pass, "head held-out accuracy " + fmt(res.holdout_accuracy) +
                    ", logistic-regression oracle " + fmt(oracle_acc)};
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-identical reports, repeat runs and serial vs parallel
// ---------------------------------------------------------------------------

Outcome criterion9(const PlantedPipeline& p) {
  EvalOptions opts = p.eopts;
  opts.n = 25;
  opts.max_tokens = 8;
  opts.seed = 77;
  opts.emit_samples = true;
  opts.epsilon = 0.3;

  auto render = [&](int threads) {
    EvalOptions o = opts;
    o.threads = threads;
    return report_to_json_string(evaluate_model(p.base.model, p.vocab, p.spec, p.templates,
                                                p.scorer, o, &p.eval_corpus));
  };
  const std::string first = render(1);
  const std::string second = render(1);
  const std::string parallel = render(4);
  if (first != second) return {false, "two serial runs differ"};
  if (first != parallel) return {false, "serial and 4-thread runs differ"};
  return {true, "repeat and serial-vs-parallel reports are byte-identical (" +
                    std::to_string(first.size()) + " bytes)"};
}

}  // namespace

int main() {
  bool all_pass = true;
  auto run = [&](int id, const std::string& label, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %d: %s — %s\n", o.pass ? "PASS" : "FAIL", id, label.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  };

  run(1, "W1 matches grid integration of |F_p - F_q|", criterion1);
  run(2, "W1 equals mean demographic disparity over uniform tau", criterion2);
  run(3, "metric reductions and truncated-Gaussian brackets", criterion3);
  run(4, "lexicon scorer closed forms", criterion4);
  run(5, "finite-difference check of LM and fairness gradients", criterion5);

  // Criteria 6 and 7 share one planted-bias pipeline; a build failure fails both.
  std::optional<PlantedPipeline> pipeline;
  const auto t0 = Clock::now();
  std::string build_error;
  try {
    pipeline.emplace();
  } catch (const std::exception& e) {
    build_error = e.what();
  }
  run(6, "planted bias detected then halved within the PPL budget", [&]() -> Outcome {
    if (!pipeline) return {false, "pipeline build failed: " + build_error};
    Outcome o = criterion6(*pipeline, seconds_since(t0));
    return o;
  });
  run(7, "lambda sweep trades off I.F. against S.S. monotonically", [&]() -> Outcome {
    if (!pipeline) return {false, "pipeline build failed: " + build_error};
    return criterion7(*pipeline);
  });

  run(8, "sentiment head beats 95% against a logistic-regression oracle", criterion8);
  run(9, "evaluation reports are byte-identical across runs and threads", [&]() -> Outcome {
    if (!pipeline) return {false, "pipeline build failed: " + build_error};
    return criterion9(*pipeline);
  });

  return all_pass ? 0 : 1;
}
