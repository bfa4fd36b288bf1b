#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairgen/attribute_spec.hpp"
#include "fairgen/error.hpp"
#include "fairgen/text.hpp"

namespace fairgen {

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_error, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_config, "unparseable JSON in " + path + ": " + e.what());
  }
}

// Attribute-spec file: {"name", "pairing", "subgroups": [{"value", "tokens",
// "pronoun_class"?}]}.
inline AttributeSpec load_attribute_spec(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  try {
    const std::string name = j.at("name").get<std::string>();
    const std::string pairing_s = j.value("pairing", "subgroup_level");
    Pairing pairing;
    if (pairing_s == "subgroup_level")
      pairing = Pairing::subgroup_level;
    else if (pairing_s == "token_level")
      pairing = Pairing::token_level;
    else
      raise(errc::invalid_config, "unknown pairing '" + pairing_s + "' in " + path);
    std::vector<SubgroupSpec> subgroups;
    for (const nlohmann::json& s : j.at("subgroups")) {
      SubgroupSpec sub;
      sub.value = s.at("value").get<std::string>();
      sub.tokens = s.at("tokens").get<std::vector<std::string>>();
      if (s.contains("pronoun_class")) {
        const std::string pc = s.at("pronoun_class").get<std::string>();
        if (pc == "he")
          sub.pronoun_class = PronounClass::he;
        else if (pc == "she")
          sub.pronoun_class = PronounClass::she;
        else if (pc == "neutral")
          sub.pronoun_class = PronounClass::neutral;
        else
          raise(errc::invalid_config, "unknown pronoun_class '" + pc + "' in " + path);
      }
      subgroups.push_back(std::move(sub));
    }
    return AttributeSpec(name, std::move(subgroups), pairing);
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_config, "malformed attribute spec " + path + ": " + e.what());
  }
}

// Template file: [{"id", "pattern"}, ...].
inline std::vector<Template> load_templates(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  require(j.is_array(), errc::invalid_config, "template file must hold an array: " + path);
  std::vector<Template> out;
  try {
    for (const nlohmann::json& t : j) {
      Template tmpl;
      tmpl.id = t.at("id").get<int>();
      tmpl.pattern = t.at("pattern").get<std::string>();
      tmpl.validate();
      out.push_back(std::move(tmpl));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_config, "malformed template file " + path + ": " + e.what());
  }
  require(!out.empty(), errc::empty_templates, "template file is empty: " + path);
  return out;
}

// Corpus text: one sentence per line, tokenized on load.
inline std::vector<TokenSeq> load_corpus_text(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_error, "cannot open corpus " + path);
  std::vector<TokenSeq> corpus;
  std::string line;
  while (std::getline(in, line)) {
    TokenSeq toks = tokenize(line);
    if (!toks.empty()) corpus.push_back(std::move(toks));
  }
  require(!corpus.empty(), errc::empty_corpus, "corpus file has no sentences: " + path);
  return corpus;
}

inline void save_corpus_text(const std::string& path, const std::vector<TokenSeq>& corpus) {
  std::ofstream out(path);
  require(out.good(), errc::io_error, "cannot open for writing: " + path);
  for (const TokenSeq& seq : corpus) out << detokenize(seq) << '\n';
  out.close();
  require(out.good(), errc::io_error, "write failed: " + path);
}

inline void save_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  require(out.good(), errc::io_error, "cannot open for writing: " + path);
  out << content;
  out.close();
  require(out.good(), errc::io_error, "write failed: " + path);
}

inline std::string load_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io_error, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace fairgen
