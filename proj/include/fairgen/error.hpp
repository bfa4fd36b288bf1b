#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fairgen {

enum class errc {
  // fairness specs
  no_sensitive_token,
  unknown_subgroup,
  token_not_in_subgroup,
  unresolved_pronoun,
  empty_templates,
  // scoring / distributions
  empty_batch,
  empty_distribution,
  missing_distribution,
  // language model
  prefix_too_long,
  empty_prefix,
  position_out_of_range,
  empty_corpus,
  no_sensitive_sequences,
  diverged_loss,
  single_class_dataset,
  no_qualifying_sentences,
  zero_vector,
  // harness
  empty_continuations,
  invalid_probability,
  invalid_config,
  bad_checkpoint,
  io_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::no_sensitive_token: return "NoSensitiveToken";
    case errc::unknown_subgroup: return "UnknownSubgroup";
    case errc::token_not_in_subgroup: return "TokenNotInSubgroup";
    case errc::unresolved_pronoun: return "UnresolvedPronoun";
    case errc::empty_templates: return "EmptyTemplates";
    case errc::empty_batch: return "EmptyBatch";
    case errc::empty_distribution: return "EmptyDistribution";
    case errc::missing_distribution: return "MissingDistribution";
    case errc::prefix_too_long: return "PrefixTooLong";
    case errc::empty_prefix: return "EmptyPrefix";
    case errc::position_out_of_range: return "PositionOutOfRange";
    case errc::empty_corpus: return "EmptyCorpus";
    case errc::no_sensitive_sequences: return "NoSensitiveSequences";
    case errc::diverged_loss: return "DivergedLoss";
    case errc::single_class_dataset: return "SingleClassDataset";
    case errc::no_qualifying_sentences: return "NoQualifyingSentences";
    case errc::zero_vector: return "ZeroVector";
    case errc::empty_continuations: return "EmptyContinuations";
    case errc::invalid_probability: return "InvalidProbability";
    case errc::invalid_config: return "InvalidConfig";
    case errc::bad_checkpoint: return "BadCheckpoint";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  errc code() const noexcept { return code_; }

  // Config-shaped errors exit with status 2 in the CLI, runtime errors with 3.
  bool is_config_error() const noexcept {
    return code_ == errc::invalid_config || code_ == errc::invalid_probability ||
           code_ == errc::empty_templates || code_ == errc::io_error ||
           code_ == errc::bad_checkpoint;
  }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) {
  throw error(code, msg);
}

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) raise(code, msg);
}

}  // namespace fairgen
