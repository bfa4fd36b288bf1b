#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace fairgen {

using TokenSeq = std::vector<std::string>;

inline bool is_punct_char(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '(': case ')': case '[': case ']':
      return true;
    default:
      return false;
  }
}

// Word-level tokenizer: split on whitespace, then peel leading/trailing
// punctuation into separate tokens so that "Italy," yields ["Italy", ","].
// Sensitive-token matching is whole-token and case-sensitive, so attribute
// words must survive adjacent punctuation in template text.
inline TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view word = text.substr(i, j - i);
    i = j;

    std::size_t begin = 0, end = word.size();
    while (begin < end && is_punct_char(word[begin])) ++begin;
    while (end > begin && is_punct_char(word[end - 1])) --end;
    for (std::size_t k = 0; k < begin; ++k) out.emplace_back(1, word[k]);
    if (begin < end) out.emplace_back(word.substr(begin, end - begin));
    for (std::size_t k = end; k < word.size(); ++k) out.emplace_back(1, word[k]);
  }
  return out;
}

inline std::string detokenize(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace fairgen
