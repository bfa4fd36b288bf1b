// fairgen command-line driver.
//
// Subcommands cover the full pipeline: gen-corpus -> train -> train-head ->
// debias -> evaluate / sweep -> report. Every subcommand accepts
// --config <file> with a JSON object whose keys mirror the long flag names
// (dashes become underscores); explicit flags override config values.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fairgen/attribute_spec.hpp"
#include "fairgen/checkpoint.hpp"
#include "fairgen/debias.hpp"
#include "fairgen/error.hpp"
#include "fairgen/evaluate.hpp"
#include "fairgen/io.hpp"
#include "fairgen/planted_corpus.hpp"
#include "fairgen/report_io.hpp"
#include "fairgen/sentiment.hpp"
#include "fairgen/sentiment_head.hpp"
#include "fairgen/train.hpp"
#include "fairgen/transformer.hpp"
#include "fairgen/vocab.hpp"

namespace {

using fairgen::errc;
using fairgen::require;
using nlohmann::json;

// Layers JSON config values under CLI flags: a bound option wins when given
// on the command line, otherwise the config key (flag name with underscores)
// fills it in.
class ConfigBinder {
 public:
  explicit ConfigBinder(CLI::App& cmd) : cmd_(cmd) {
    config_opt_ = cmd.add_option("--config", config_path_, "JSON config file with flag defaults");
  }

  template <typename T>
  CLI::Option* add(const std::string& flag, T& var, const std::string& desc) {
    CLI::Option* opt = cmd_.add_option(flag, var, desc);
    bind(opt, flag, [&var](const json& j) { var = j.get<T>(); });
    return opt;
  }

  CLI::Option* add_flag(const std::string& flag, bool& var, const std::string& desc) {
    CLI::Option* opt = cmd_.add_flag(flag, var, desc);
    bind(opt, flag, [&var](const json& j) { var = j.get<bool>(); });
    return opt;
  }

  // For values without a natural CLI11 binding (optionals, maps).
  void bind(CLI::Option* opt, const std::string& flag, std::function<void(const json&)> set) {
    bindings_.emplace_back(opt, key_for(flag), std::move(set));
  }

  // Call once inside the subcommand callback, before using any bound value.
  json resolve() {
    json cfg = json::object();
    if (!config_path_.empty()) {
      cfg = fairgen::load_json_file(config_path_);
      require(cfg.is_object(), errc::invalid_config, "config file must hold a JSON object");
    }
    for (const auto& [key, value] : cfg.items()) {
      if (!known_key(key)) {
        std::string msg = "unknown config key '" + key + "' for this subcommand";
        if (key.find('-') != std::string::npos)
          msg += " (config keys use underscores, e.g. '" + key_for(key) + "')";
        fairgen::raise(errc::invalid_config, msg);
      }
    }
    for (const auto& [opt, key, set] : bindings_) {
      if (opt->count() == 0 && cfg.contains(key)) {
        try {
          set(cfg.at(key));
        } catch (const json::exception& e) {
          fairgen::raise(errc::invalid_config,
                         "config key '" + key + "': " + std::string(e.what()));
        }
      }
    }
    return cfg;
  }

  static std::string key_for(const std::string& flag) {
    std::string key = flag.substr(flag.find_first_not_of('-'));
    for (char& c : key)
      if (c == '-') c = '_';
    return key;
  }

  bool known_key(const std::string& key) const {
    for (const auto& [opt, bound, set] : bindings_)
      if (bound == key) return true;
    return false;
  }

 private:
  CLI::App& cmd_;
  std::string config_path_;
  CLI::Option* config_opt_ = nullptr;
  std::vector<std::tuple<CLI::Option*, std::string, std::function<void(const json&)>>> bindings_;
};

fairgen::Lexicon load_lexicon_or_builtin(const std::string& pos_path,
                                         const std::string& neg_path) {
  require(pos_path.empty() == neg_path.empty(), errc::invalid_config,
          "--lexicon-pos and --lexicon-neg must be given together");
  if (pos_path.empty()) return fairgen::builtin_test_lexicon();
  return fairgen::Lexicon::load(pos_path, neg_path);
}

std::vector<std::vector<int>> encode_corpus(const std::vector<fairgen::TokenSeq>& corpus,
                                            const fairgen::Vocab& vocab) {
  std::vector<std::vector<int>> ids;
  ids.reserve(corpus.size());
  for (const fairgen::TokenSeq& words : corpus) {
    std::vector<int> seq{fairgen::Vocab::kBos};
    for (int id : vocab.encode(words)) seq.push_back(id);
    seq.push_back(fairgen::Vocab::kEos);
    ids.push_back(std::move(seq));
  }
  return ids;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty())
    std::cout << content;
  else
    fairgen::save_text_file(path, content);
}

// --------------------------------------------------------------------------
// gen-corpus
// --------------------------------------------------------------------------
void setup_gen_corpus(CLI::App& app) {
  CLI::App& cmd = *app.add_subcommand("gen-corpus", "Generate a synthetic planted-bias corpus");
  auto binder = std::make_shared<ConfigBinder>(cmd);
  auto attribute = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto lex_pos = std::make_shared<std::string>();
  auto lex_neg = std::make_shared<std::string>();
  auto prob_kv = std::make_shared<std::vector<std::string>>();
  auto cfg = std::make_shared<fairgen::PlantedBiasConfig>();

  binder->add("--attribute", *attribute, "attribute spec JSON");
  binder->add("--out", *out, "output corpus path (one sentence per line)");
  binder->add("--sentences", cfg->sentences, "number of sentences");
  binder->add("--seed", cfg->seed, "RNG seed");
  binder->add("--filler-fraction", cfg->filler_fraction, "share of sensitive-free filler");
  binder->add("--adjective-pool", cfg->adjective_pool, "adjectives per polarity");
  binder->add("--lexicon-pos", *lex_pos, "positive word list (default: built-in)");
  binder->add("--lexicon-neg", *lex_neg, "negative word list (default: built-in)");
  CLI::Option* prob_opt = cmd.add_option("--positive-prob", *prob_kv,
                                         "per-subgroup P(positive), repeatable value=p");
  binder->bind(prob_opt, "--positive-prob", [prob_kv](const json& j) {
    require(j.is_object(), errc::invalid_config, "positive_prob must be an object");
    for (const auto& [k, v] : j.items())
      prob_kv->push_back(k + "=" + std::to_string(v.get<double>()));
  });

  cmd.callback([binder, attribute, out, lex_pos, lex_neg, prob_kv, cfg]() {
    binder->resolve();
    require(!attribute->empty(), errc::invalid_config, "gen-corpus needs --attribute");
    require(!out->empty(), errc::invalid_config, "gen-corpus needs --out");
    for (const std::string& kv : *prob_kv) {
      const size_t eq = kv.find('=');
      require(eq != std::string::npos, errc::invalid_config,
              "--positive-prob expects value=p, got '" + kv + "'");
      try {
        cfg->positive_prob[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        fairgen::raise(errc::invalid_probability, "cannot parse probability in '" + kv + "'");
      }
    }
    const fairgen::AttributeSpec spec = fairgen::load_attribute_spec(*attribute);
    const fairgen::Lexicon lex = load_lexicon_or_builtin(*lex_pos, *lex_neg);
    const std::vector<fairgen::TokenSeq> corpus = fairgen::generate_planted_corpus(*cfg, spec, lex);
    fairgen::save_corpus_text(*out, corpus);
    std::cout << "wrote " << corpus.size() << " sentences to " << *out << "\n";
  });
}

// --------------------------------------------------------------------------
// train
// --------------------------------------------------------------------------
void setup_train(CLI::App& app) {
  CLI::App& cmd = *app.add_subcommand("train", "Pretrain the language model (curriculum step 1)");
  auto binder = std::make_shared<ConfigBinder>(cmd);
  auto corpus_path = std::make_shared<std::string>();
  auto attribute = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto vocab_max = std::make_shared<int>(2000);
  auto lm_cfg = std::make_shared<fairgen::LmConfig>();
  auto train_cfg = std::make_shared<fairgen::TrainConfig>();

  binder->add("--corpus", *corpus_path, "training corpus (one sentence per line)");
  binder->add("--attribute", *attribute, "attribute spec JSON; its tokens are forced into vocab");
  binder->add("--out", *out, "output checkpoint path");
  binder->add("--vocab-max", *vocab_max, "maximum vocabulary size");
  binder->add("--layers", lm_cfg->layers, "transformer blocks");
  binder->add("--d-model", lm_cfg->d_model, "residual width");
  binder->add("--heads", lm_cfg->heads, "attention heads");
  binder->add("--context", lm_cfg->context, "context length");
  binder->add("--steps", train_cfg->steps, "optimizer steps");
  binder->add("--batch-size", train_cfg->batch_size, "sequences per step");
  binder->add("--lr", train_cfg->lr, "Adam learning rate");
  binder->add("--seed", train_cfg->seed, "RNG seed (also initializes weights)");
  binder->add("--val-fraction", train_cfg->val_fraction, "held-out fraction (0: validate on train)");

  cmd.callback([binder, corpus_path, attribute, out, vocab_max, lm_cfg, train_cfg]() {
    binder->resolve();
    require(!corpus_path->empty(), errc::invalid_config, "train needs --corpus");
    require(!out->empty(), errc::invalid_config, "train needs --out");
    const std::vector<fairgen::TokenSeq> corpus = fairgen::load_corpus_text(*corpus_path);
    std::vector<std::string> forced;
    if (!attribute->empty()) forced = fairgen::load_attribute_spec(*attribute).all_tokens();
    const fairgen::Vocab vocab =
        fairgen::Vocab::build(corpus, forced, static_cast<size_t>(*vocab_max));
    lm_cfg->vocab = static_cast<int>(vocab.size());
    fairgen::LmModel model = fairgen::LmModel::init(*lm_cfg, train_cfg->seed);
    const fairgen::TrainResult result =
        fairgen::train_lm(model, encode_corpus(corpus, vocab), *train_cfg);
    json provenance = {{"stage", "pretrained"},
                       {"corpus", *corpus_path},
                       {"steps", train_cfg->steps},
                       {"batch_size", train_cfg->batch_size},
                       {"lr", train_cfg->lr},
                       {"seed", train_cfg->seed},
                       {"final_val_ppl", result.final_val_ppl}};
    fairgen::save_lm_checkpoint(*out, model, vocab, provenance);
    std::cout << "trained " << train_cfg->steps << " steps on " << result.train_sequences
              << " sequences (val " << result.val_sequences << "), final val PPL "
              << result.final_val_ppl << "\nwrote " << *out << "\n";
  });
}

// --------------------------------------------------------------------------
// train-head
// --------------------------------------------------------------------------
void setup_train_head(CLI::App& app) {
  CLI::App& cmd =
      *app.add_subcommand("train-head", "Train the sentiment head (curriculum step 2)");
  auto binder = std::make_shared<ConfigBinder>(cmd);
  auto ckpt = std::make_shared<std::string>();
  auto corpus_path = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto lex_pos = std::make_shared<std::string>();
  auto lex_neg = std::make_shared<std::string>();
  auto pos_threshold = std::make_shared<double>(0.8);
  auto neg_threshold = std::make_shared<double>(0.2);
  auto min_opinion = std::make_shared<int>(2);
  auto head_cfg = std::make_shared<fairgen::HeadTrainConfig>();

  binder->add("--checkpoint", *ckpt, "pretrained LM checkpoint");
  binder->add("--corpus", *corpus_path, "sentence corpus for silver labels");
  binder->add("--out", *out, "output head checkpoint path");
  binder->add("--lexicon-pos", *lex_pos, "positive word list (default: built-in)");
  binder->add("--lexicon-neg", *lex_neg, "negative word list (default: built-in)");
  binder->add("--pos-threshold", *pos_threshold, "lexicon score >= this labels positive");
  binder->add("--neg-threshold", *neg_threshold, "lexicon score <= this labels negative");
  binder->add("--min-opinion-words", *min_opinion, "opinion words required per sentence");
  binder->add("--steps", head_cfg->steps, "optimizer steps");
  binder->add("--batch-size", head_cfg->batch_size, "examples per step");
  binder->add("--lr", head_cfg->lr, "Adam learning rate");
  binder->add("--seed", head_cfg->seed, "RNG seed (also initializes weights)");
  binder->add("--holdout-fraction", head_cfg->holdout_fraction, "held-out accuracy fraction");

  cmd.callback([binder, ckpt, corpus_path, out, lex_pos, lex_neg, pos_threshold, neg_threshold,
                min_opinion, head_cfg]() {
    binder->resolve();
    require(!ckpt->empty(), errc::invalid_config, "train-head needs --checkpoint");
    require(!corpus_path->empty(), errc::invalid_config, "train-head needs --corpus");
    require(!out->empty(), errc::invalid_config, "train-head needs --out");
    const fairgen::LoadedLm lm = fairgen::load_lm_checkpoint(*ckpt);
    const std::vector<fairgen::TokenSeq> corpus = fairgen::load_corpus_text(*corpus_path);
    const fairgen::Lexicon lex = load_lexicon_or_builtin(*lex_pos, *lex_neg);
    const std::vector<fairgen::HeadExample> dataset = fairgen::build_head_dataset(
        corpus, lm.model, lm.vocab, lex, *pos_threshold, *neg_threshold, *min_opinion);
    fairgen::SentimentHead head = fairgen::SentimentHead::init(lm.model.cfg.d_model, head_cfg->seed);
    const fairgen::HeadTrainResult result = fairgen::train_sentiment_head(head, dataset, *head_cfg);
    json provenance = {{"lm_checkpoint", *ckpt},
                       {"corpus", *corpus_path},
                       {"examples", dataset.size()},
                       {"steps", head_cfg->steps},
                       {"seed", head_cfg->seed},
                       {"holdout_accuracy", result.holdout_accuracy}};
    fairgen::save_head_checkpoint(*out, head, provenance);
    std::cout << "trained head on " << result.train_count << " examples, held-out accuracy "
              << result.holdout_accuracy << " over " << result.holdout_count << "\nwrote " << *out
              << "\n";
  });
}

// --------------------------------------------------------------------------
// debias
// --------------------------------------------------------------------------
void setup_debias(CLI::App& app) {
  CLI::App& cmd =
      *app.add_subcommand("debias", "Fairness-regularized fine-tuning (curriculum step 3)");
  auto binder = std::make_shared<ConfigBinder>(cmd);
  auto ckpt = std::make_shared<std::string>();
  auto head_path = std::make_shared<std::string>();
  auto corpus_path = std::make_shared<std::string>();
  auto attribute = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto method = std::make_shared<std::string>("embedding_reg");
  auto cfg = std::make_shared<fairgen::DebiasConfig>();

  binder->add("--checkpoint", *ckpt, "pretrained LM checkpoint");
  binder->add("--head", *head_path, "sentiment head checkpoint (required for sentiment_reg)");
  binder->add("--corpus", *corpus_path, "fine-tuning corpus");
  binder->add("--attribute", *attribute, "attribute spec JSON");
  binder->add("--out", *out, "output checkpoint path");
  binder->add("--method", *method, "embedding_reg | sentiment_reg");
  binder->add("--lambda", cfg->lambda, "fairness loss weight");
  binder->add("--steps", cfg->steps, "fine-tuning steps");
  binder->add("--lr", cfg->lr, "Adam learning rate");
  binder->add("--seed", cfg->seed, "RNG seed (sequence order + counterfactual draws)");

  cmd.callback([binder, ckpt, head_path, corpus_path, attribute, out, method, cfg]() {
    binder->resolve();
    require(!ckpt->empty(), errc::invalid_config, "debias needs --checkpoint");
    require(!corpus_path->empty(), errc::invalid_config, "debias needs --corpus");
    require(!attribute->empty(), errc::invalid_config, "debias needs --attribute");
    require(!out->empty(), errc::invalid_config, "debias needs --out");
    cfg->method = fairgen::debias_method_from_string(*method);

    fairgen::LoadedLm lm = fairgen::load_lm_checkpoint(*ckpt);
    fairgen::CurriculumState state;
    state.model = std::move(lm.model);
    state.provenance = lm.provenance.is_object() ? lm.provenance : json::object();
    if (!head_path->empty()) {
      state.head = fairgen::load_head_checkpoint(*head_path).head;
      state.stage = fairgen::CurriculumStage::head_trained;
    }
    const fairgen::AttributeSpec spec = fairgen::load_attribute_spec(*attribute);
    const std::vector<fairgen::TokenSeq> corpus = fairgen::load_corpus_text(*corpus_path);
    const fairgen::DebiasResult result = fairgen::debias(state, lm.vocab, corpus, spec, *cfg);
    fairgen::save_lm_checkpoint(*out, state.model, lm.vocab, state.provenance);
    const double last_total = result.metrics.empty() ? 0.0 : result.metrics.back().total_loss;
    std::cout << "debias (" << *method << ", lambda " << cfg->lambda << ") ran " << cfg->steps
              << " steps, final total loss " << last_total << "\nwrote " << *out << "\n";
  });
}

// --------------------------------------------------------------------------
// evaluate
// --------------------------------------------------------------------------
struct EvalArgs {
  std::string ckpt, attribute, templates, lex_pos, lex_neg, eval_corpus, out;
  fairgen::EvalOptions opts;
  double epsilon = -1.0;  // <0: unset
};

void add_eval_flags(ConfigBinder& binder, CLI::App& cmd, EvalArgs& a) {
  binder.add("--checkpoint", a.ckpt, "LM checkpoint to evaluate");
  binder.add("--attribute", a.attribute, "attribute spec JSON");
  binder.add("--templates", a.templates, "template file JSON");
  binder.add("--lexicon-pos", a.lex_pos, "positive word list (default: built-in)");
  binder.add("--lexicon-neg", a.lex_neg, "negative word list (default: built-in)");
  binder.add("--eval-corpus", a.eval_corpus, "held-out corpus for PPL / PPL^s (optional)");
  binder.add("--n", a.opts.n, "continuations sampled per prefix");
  binder.add("--max-tokens", a.opts.max_tokens, "max tokens per continuation");
  binder.add("--temperature", a.opts.temperature, "sampling temperature");
  binder.add("--seed", a.opts.seed, "master sampling seed");
  binder.add("--ss-threshold", a.opts.ss_threshold, "semantic-similarity cosine threshold");
  binder.add("--threads", a.opts.threads, "worker threads (results are thread-count invariant)");
  binder.add_flag("--emit-samples", a.opts.emit_samples, "include sorted score samples in report");
  CLI::Option* eps = cmd.add_option("--epsilon", a.epsilon, "epsilon-fairness threshold");
  binder.bind(eps, "--epsilon", [&a](const json& j) { a.epsilon = j.get<double>(); });
}

void setup_evaluate(CLI::App& app) {
  CLI::App& cmd = *app.add_subcommand("evaluate", "Compute the fairness report for a checkpoint");
  auto binder = std::make_shared<ConfigBinder>(cmd);
  auto a = std::make_shared<EvalArgs>();
  add_eval_flags(*binder, cmd, *a);
  binder->add("--out", a->out, "report JSON path (default: stdout)");

  cmd.callback([binder, a]() {
    binder->resolve();
    require(!a->ckpt.empty(), errc::invalid_config, "evaluate needs --checkpoint");
    require(!a->attribute.empty(), errc::invalid_config, "evaluate needs --attribute");
    require(!a->templates.empty(), errc::invalid_config, "evaluate needs --templates");
    if (a->epsilon >= 0.0) a->opts.epsilon = a->epsilon;

    const fairgen::LoadedLm lm = fairgen::load_lm_checkpoint(a->ckpt);
    const fairgen::AttributeSpec spec = fairgen::load_attribute_spec(a->attribute);
    const std::vector<fairgen::Template> templates = fairgen::load_templates(a->templates);
    const fairgen::LexiconScorer scorer(load_lexicon_or_builtin(a->lex_pos, a->lex_neg));
    std::vector<fairgen::TokenSeq> eval_corpus;
    if (!a->eval_corpus.empty()) eval_corpus = fairgen::load_corpus_text(a->eval_corpus);

    const fairgen::FairnessReport report =
        fairgen::evaluate_model(lm.model, lm.vocab, spec, templates, scorer, a->opts,
                                a->eval_corpus.empty() ? nullptr : &eval_corpus);
    write_output(a->out, fairgen::report_to_json_string(report));
    if (!a->out.empty())
      std::cout << "I.F. " << report.individual_fairness << ", G.F. " << report.group_fairness
                << "\nwrote " << a->out << "\n";
  });
}

// --------------------------------------------------------------------------
// sweep
// --------------------------------------------------------------------------
void setup_sweep(CLI::App& app) {
  CLI::App& cmd =
      *app.add_subcommand("sweep", "Debias + evaluate over a lambda grid, emit trade-off table");
  auto binder = std::make_shared<ConfigBinder>(cmd);
  auto a = std::make_shared<EvalArgs>();
  auto head_path = std::make_shared<std::string>();
  auto corpus_path = std::make_shared<std::string>();
  auto method = std::make_shared<std::string>("embedding_reg");
  auto lambdas = std::make_shared<std::vector<double>>();
  auto out_dir = std::make_shared<std::string>();
  auto debias_cfg = std::make_shared<fairgen::DebiasConfig>();

  add_eval_flags(*binder, cmd, *a);
  binder->add("--head", *head_path, "sentiment head checkpoint (required for sentiment_reg)");
  binder->add("--corpus", *corpus_path, "fine-tuning corpus");
  binder->add("--method", *method, "embedding_reg | sentiment_reg");
  binder->add("--steps", debias_cfg->steps, "fine-tuning steps per lambda");
  binder->add("--lr", debias_cfg->lr, "Adam learning rate");
  binder->add("--debias-seed", debias_cfg->seed, "debias RNG seed (shared across lambdas)");
  binder->add("--out-dir", *out_dir, "output directory for reports + tradeoff.csv");
  CLI::Option* lam = cmd.add_option("--lambdas", *lambdas, "lambda grid, repeatable or comma list")
                         ->delimiter(',');
  binder->bind(lam, "--lambdas", [lambdas](const json& j) {
    *lambdas = j.get<std::vector<double>>();
  });

  cmd.callback([binder, a, head_path, corpus_path, method, lambdas, out_dir, debias_cfg]() {
    binder->resolve();
    require(!a->ckpt.empty(), errc::invalid_config, "sweep needs --checkpoint");
    require(!a->attribute.empty(), errc::invalid_config, "sweep needs --attribute");
    require(!a->templates.empty(), errc::invalid_config, "sweep needs --templates");
    require(!corpus_path->empty(), errc::invalid_config, "sweep needs --corpus");
    require(!out_dir->empty(), errc::invalid_config, "sweep needs --out-dir");
    if (a->epsilon >= 0.0) a->opts.epsilon = a->epsilon;
    debias_cfg->method = fairgen::debias_method_from_string(*method);

    fairgen::LoadedLm lm = fairgen::load_lm_checkpoint(a->ckpt);
    fairgen::CurriculumState base;
    base.model = std::move(lm.model);
    base.provenance = lm.provenance.is_object() ? lm.provenance : json::object();
    if (!head_path->empty()) {
      base.head = fairgen::load_head_checkpoint(*head_path).head;
      base.stage = fairgen::CurriculumStage::head_trained;
    }
    const fairgen::AttributeSpec spec = fairgen::load_attribute_spec(a->attribute);
    const std::vector<fairgen::Template> templates = fairgen::load_templates(a->templates);
    const fairgen::LexiconScorer scorer(load_lexicon_or_builtin(a->lex_pos, a->lex_neg));
    const std::vector<fairgen::TokenSeq> corpus = fairgen::load_corpus_text(*corpus_path);
    std::vector<fairgen::TokenSeq> eval_corpus;
    if (!a->eval_corpus.empty()) eval_corpus = fairgen::load_corpus_text(a->eval_corpus);

    std::vector<std::pair<double, fairgen::FairnessReport>> rows = fairgen::sweep_lambda(
        base, lm.vocab, corpus, spec, templates, scorer, *debias_cfg, *lambdas, a->opts,
        a->eval_corpus.empty() ? nullptr : &eval_corpus);

    std::filesystem::create_directories(*out_dir);
    for (const auto& [lambda, report] : rows) {
      std::ostringstream name;
      name << "report_lambda_" << lambda << ".json";
      fairgen::save_text_file(*out_dir + "/" + name.str(),
                              fairgen::report_to_json_string(report));
    }
    fairgen::save_text_file(*out_dir + "/tradeoff.csv", fairgen::sweep_csv(rows));
    fairgen::save_text_file(*out_dir + "/tradeoff.gnuplot",
                            fairgen::sweep_gnuplot_script("tradeoff.csv"));
    std::cout << "swept " << rows.size() << " lambdas (" << *method << ") into " << *out_dir
              << "\n";
  });
}

// --------------------------------------------------------------------------
// report
// --------------------------------------------------------------------------
void setup_report(CLI::App& app) {
  CLI::App& cmd = *app.add_subcommand("report", "Render a report JSON as markdown or CSV");
  auto binder = std::make_shared<ConfigBinder>(cmd);
  auto in = std::make_shared<std::string>();
  auto format = std::make_shared<std::string>("markdown");
  auto out = std::make_shared<std::string>();

  binder->add("--in", *in, "report JSON file");
  binder->add("--format", *format, "markdown | csv");
  binder->add("--out", *out, "output path (default: stdout)");

  cmd.callback([binder, in, format, out]() {
    binder->resolve();
    require(!in->empty(), errc::invalid_config, "report needs --in");
    const fairgen::FairnessReport r = fairgen::report_from_json(fairgen::load_json_file(*in));
    std::string rendered;
    if (*format == "markdown")
      rendered = fairgen::report_markdown(r);
    else if (*format == "csv")
      rendered = fairgen::report_csv_header() + "\n" + fairgen::report_csv_row(r) + "\n";
    else
      fairgen::raise(errc::invalid_config, "unknown format '" + *format + "'");
    write_output(*out, rendered);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual sentiment-fairness toolkit for generative language models"};
  app.require_subcommand(1);
  setup_gen_corpus(app);
  setup_train(app);
  setup_train_head(app);
  setup_debias(app);
  setup_evaluate(app);
  setup_sweep(app);
  setup_report(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 2;
  } catch (const fairgen::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_config_error() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
