#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cowlog/errors.hpp"

namespace cowlog {

// A (context command line, gold utility answer) pair. The on-disk form
// is JSON-lines: {"context": str, "answer": str}, optionally with a
// "prediction" field when a model's output has been attached.
struct QaExample {
  std::string context;
  std::string answer;
  std::string prediction;  // empty unless the file carried one
};

inline std::vector<QaExample> read_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<QaExample> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw MalformedJson(path + ":" + std::to_string(lineno) +
                          ": not a JSON object");
    QaExample ex;
    if (j.contains("context")) ex.context = j["context"].get<std::string>();
    if (j.contains("answer")) ex.answer = j["answer"].get<std::string>();
    if (j.contains("prediction"))
      ex.prediction = j["prediction"].get<std::string>();
    out.push_back(std::move(ex));
  }
  return out;
}

inline void write_examples(const std::string& path,
                           const std::vector<QaExample>& examples,
                           bool with_prediction = false) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& ex : examples) {
    nlohmann::ordered_json j;
    j["context"] = ex.context;
    j["answer"] = ex.answer;
    if (with_prediction) j["prediction"] = ex.prediction;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace cowlog
