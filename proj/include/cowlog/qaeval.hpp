#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cowlog/errors.hpp"

namespace cowlog {

// SQuAD-style span evaluation: answers are normalized, tokenized on
// whitespace and compared as token multisets.

struct ExampleScore {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool exact_match = false;
};

struct EvalReport {
  size_t n_examples = 0;
  double mean_f1 = 0.0;
  double mean_em = 0.0;
  std::vector<ExampleScore> per_example;
};

inline bool is_ascii_punct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
         (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

// Lowercase, delete ASCII punctuation, drop the articles "a"/"an"/"the"
// as whole tokens, collapse whitespace.
inline std::string squad_normalize(std::string_view text) {
  std::string depunct;
  depunct.reserve(text.size());
  for (char c : text) {
    if (is_ascii_punct(c)) continue;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    depunct += c;
  }
  std::string out;
  size_t i = 0;
  while (i < depunct.size()) {
    while (i < depunct.size() && std::isspace(static_cast<unsigned char>(depunct[i]))) ++i;
    size_t start = i;
    while (i < depunct.size() && !std::isspace(static_cast<unsigned char>(depunct[i]))) ++i;
    if (i == start) break;
    std::string_view tok(depunct.data() + start, i - start);
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out += ' ';
    out.append(tok);
  }
  return out;
}

inline std::vector<std::string> normalized_tokens(std::string_view text) {
  std::string norm = squad_normalize(text);
  std::vector<std::string> toks;
  size_t i = 0;
  while (i < norm.size()) {
    size_t sp = norm.find(' ', i);
    if (sp == std::string::npos) sp = norm.size();
    toks.emplace_back(norm.substr(i, sp - i));
    i = sp + 1;
  }
  return toks;
}

inline bool exact_match(std::string_view pred, std::string_view gold) {
  return squad_normalize(pred) == squad_normalize(gold);
}

// Token-overlap F1 between a prediction and a gold answer. Both empty
// after normalization counts as perfect agreement.
inline ExampleScore token_f1(std::string_view pred, std::string_view gold) {
  ExampleScore s;
  std::vector<std::string> p = normalized_tokens(pred);
  std::vector<std::string> g = normalized_tokens(gold);
  s.exact_match = squad_normalize(pred) == squad_normalize(gold);

  if (p.empty() && g.empty()) {
    s.f1 = 1.0;
    return s;
  }

  std::map<std::string, int64_t> bag;
  for (const auto& t : g) ++bag[t];
  int64_t tp = 0;
  for (const auto& t : p) {
    auto it = bag.find(t);
    if (it != bag.end() && it->second > 0) {
      --it->second;
      ++tp;
    }
  }
  s.tp = tp;
  s.fp = static_cast<int64_t>(p.size()) - tp;
  s.fn = static_cast<int64_t>(g.size()) - tp;
  s.precision = (s.tp + s.fp) > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp) : 0.0;
  s.recall = (s.tp + s.fn) > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn) : 0.0;
  s.f1 = s.tp > 0 ? static_cast<double>(s.tp) /
                        (static_cast<double>(s.tp) +
                         static_cast<double>(s.fp + s.fn) / 2.0)
                  : 0.0;
  return s;
}

inline EvalReport evaluate(const std::vector<std::string>& predictions,
                           const std::vector<std::string>& golds) {
  if (predictions.size() != golds.size())
    throw LengthMismatch("predictions and golds differ in length");
  if (predictions.empty()) throw EmptyEval("nothing to evaluate");

  EvalReport report;
  report.n_examples = predictions.size();
  report.per_example.reserve(predictions.size());
  double f1_sum = 0.0, em_sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    ExampleScore s = token_f1(predictions[i], golds[i]);
    f1_sum += s.f1;
    em_sum += s.exact_match ? 1.0 : 0.0;
    report.per_example.push_back(s);
  }
  report.mean_f1 = f1_sum / static_cast<double>(report.n_examples);
  report.mean_em = em_sum / static_cast<double>(report.n_examples);
  return report;
}

inline nlohmann::json eval_report_to_json(const EvalReport& report,
                                          bool include_examples = false) {
  nlohmann::json j;
  j["n_examples"] = report.n_examples;
  j["mean_f1"] = report.mean_f1;
  j["mean_em"] = report.mean_em;
  if (include_examples) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : report.per_example) {
      arr.push_back({{"tp", s.tp},
                     {"fp", s.fp},
                     {"fn", s.fn},
                     {"precision", s.precision},
                     {"recall", s.recall},
                     {"f1", s.f1},
                     {"exact_match", s.exact_match}});
    }
    j["per_example"] = std::move(arr);
  }
  return j;
}

}  // namespace cowlog
