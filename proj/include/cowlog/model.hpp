#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cowlog/dataset.hpp"
#include "cowlog/errors.hpp"
#include "cowlog/lexer.hpp"
#include "cowlog/qaeval.hpp"
#include "cowlog/strutil.hpp"

namespace cowlog {

struct Prediction {
  std::string answer;  // space-joined predicted utilities, segment order
  double score = 0.0;  // confidence in [0, 1]
};

// Pluggable extractor: command line in, predicted utilities out. The
// rule oracle and the trained statistical model both implement it, so
// the pipeline and the server run unmodified with either backend.
class Extractor {
public:
  virtual ~Extractor() = default;
  virtual Prediction predict(std::string_view context) const = 0;
  virtual std::string version() const = 0;
};

class RuleOracleExtractor : public Extractor {
public:
  Prediction predict(std::string_view context) const override {
    std::vector<std::string> utils = extract_utilities(context);
    Prediction p;
    for (const auto& u : utils) {
      if (!p.answer.empty()) p.answer += ' ';
      p.answer += u;
    }
    p.score = p.answer.empty() ? 0.0 : 1.0;
    return p;
  }
  std::string version() const override { return "rule-oracle-v1"; }
};

// ---------------------------------------------------------------------------
// Averaged perceptron extractor
// ---------------------------------------------------------------------------

enum Feature : size_t {
  F_HEAD = 0,        // first non-assignment token of its segment
  F_VOCAB,           // basename seen as a gold utility during training
  F_SLASH,           // token contains '/'
  F_ASSIGN,          // token contains '='
  F_FLAG,            // token starts with '-'
  F_AFTER_WRAPPER,   // previous token is a wrapper prefix
  F_URL,             // token contains "://"
  F_LINE_FIRST,      // first token of the whole line
  kFeatureCount,
};

inline const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "F_HEAD",  "F_VOCAB", "F_SLASH",       "F_ASSIGN",
      "F_FLAG",  "F_AFTER_WRAPPER", "F_URL", "F_LINE_FIRST"};
  return names;
}

struct FeaturizedToken {
  std::string text;
  std::string basename;
  uint32_t bits = 0;

  bool has(Feature f) const { return (bits >> f) & 1u; }
};

struct FeaturizedSegment {
  std::vector<FeaturizedToken> tokens;
};

// Per-token binary features, grouped by segment. `vocab` feeds F_VOCAB
// and may be empty.
inline std::vector<FeaturizedSegment> featurize(
    std::string_view context, const std::set<std::string>& vocab) {
  using lexdetail::basename_of;
  std::vector<FeaturizedSegment> out;
  Segmentation segs = segment(context);
  bool line_first_pending = true;
  for (const Segment& seg : segs.segments) {
    FeaturizedSegment fs;
    bool head_pending = true;
    for (size_t i = 0; i < seg.tokens.size(); ++i) {
      const std::string& tok = seg.tokens[i];
      FeaturizedToken ft;
      ft.text = tok;
      ft.basename = basename_of(tok);
      bool assign = tok.find('=') != std::string::npos;
      if (head_pending && !assign) {
        ft.bits |= 1u << F_HEAD;
        head_pending = false;
      }
      if (vocab.count(ft.basename)) ft.bits |= 1u << F_VOCAB;
      if (tok.find('/') != std::string::npos) ft.bits |= 1u << F_SLASH;
      if (assign) ft.bits |= 1u << F_ASSIGN;
      if (!tok.empty() && tok.front() == '-') ft.bits |= 1u << F_FLAG;
      if (i > 0 && lexdetail::is_wrapper(basename_of(seg.tokens[i - 1])))
        ft.bits |= 1u << F_AFTER_WRAPPER;
      if (tok.find("://") != std::string::npos) ft.bits |= 1u << F_URL;
      if (line_first_pending) ft.bits |= 1u << F_LINE_FIRST;
      line_first_pending = false;
      fs.tokens.push_back(std::move(ft));
    }
    if (!fs.tokens.empty()) out.push_back(std::move(fs));
  }
  return out;
}

struct Hyperparams {
  int epochs = 2;
  int batch_size = 2;  // recorded for report parity; perceptron updates are per step
  bool averaging = true;
};

struct TrainReport {
  int epochs_run = 0;
  size_t train_examples = 0;
  size_t val_examples = 0;
  std::vector<double> val_f1;  // one entry per epoch
  double wall_time_s = 0.0;
  size_t longest_context_tokens = 0;
};

inline nlohmann::json train_report_to_json(const TrainReport& r) {
  return nlohmann::json{{"epochs_run", r.epochs_run},
                        {"train_examples", r.train_examples},
                        {"val_examples", r.val_examples},
                        {"val_f1", r.val_f1},
                        {"wall_time_s", r.wall_time_s},
                        {"longest_context_tokens", r.longest_context_tokens}};
}

class PerceptronExtractor : public Extractor {
public:
  static constexpr int kFormatVersion = 1;

  PerceptronExtractor() = default;

  static std::pair<PerceptronExtractor, TrainReport> train(
      const std::vector<QaExample>& train_set,
      const std::vector<QaExample>& val_set, Hyperparams hyper = {});

  Prediction predict(std::string_view context) const override {
    if (!trained_) throw UntrainedModel("predict called before train/load");
    std::vector<FeaturizedSegment> segs = featurize(context, utility_vocab_);
    Prediction pred;
    if (segs.empty()) return pred;

    double score_sum = 0.0;
    size_t scored = 0;
    for (const FeaturizedSegment& seg : segs) {
      size_t best = 0;
      double top1 = -1e300, top2 = -1e300;
      for (size_t i = 0; i < seg.tokens.size(); ++i) {
        double s = score_token(seg.tokens[i]);
        if (s > top1) {
          top2 = top1;
          top1 = s;
          best = i;
        } else if (s > top2) {
          top2 = s;
        }
      }
      const std::string& name = seg.tokens[best].basename;
      if (!name.empty()) {
        if (!pred.answer.empty()) pred.answer += ' ';
        pred.answer += name;
      }
      double margin = seg.tokens.size() > 1 ? top1 - top2 : top1;
      score_sum += logistic(margin);
      ++scored;
    }
    pred.score = scored > 0 ? score_sum / static_cast<double>(scored) : 0.0;
    if (pred.score < 0.0) pred.score = 0.0;
    if (pred.score > 1.0) pred.score = 1.0;
    return pred;
  }

  std::string version() const override {
    if (!trained_) return "avp-v1-untrained";
    return "avp-v1-" + hex64(payload_checksum()).substr(0, 8);
  }

  void save(const std::string& path) const {
    if (!trained_) throw UntrainedModel("cannot save an untrained model");
    nlohmann::ordered_json j;
    j["format"] = "cowlog-extractor";
    j["version"] = kFormatVersion;
    nlohmann::ordered_json payload = payload_json();
    j["checksum"] = hex64(fnv1a64(payload.dump()));
    j["payload"] = std::move(payload);
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write model file " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for model file " + path);
  }

  static PerceptronExtractor load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j = nlohmann::json::parse(buf.str(), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("format") ||
        j["format"] != "cowlog-extractor" || !j.contains("payload") ||
        !j.contains("checksum"))
      throw CorruptModel("model file " + path + " is not a cowlog extractor");
    if (!j.contains("version") || !j["version"].is_number_integer() ||
        j["version"].get<int>() != kFormatVersion)
      throw VersionMismatch("unsupported model format version in " + path);

    // Re-serialize the payload canonically and compare checksums.
    nlohmann::ordered_json payload =
        nlohmann::ordered_json::parse(j["payload"].dump());
    PerceptronExtractor m;
    m.from_payload(payload);
    std::string expect = j["checksum"].get<std::string>();
    if (hex64(fnv1a64(m.payload_json().dump())) != expect)
      throw CorruptModel("checksum mismatch in model file " + path);
    m.trained_ = true;
    return m;
  }

  const std::set<std::string>& utility_vocab() const { return utility_vocab_; }
  const std::array<double, kFeatureCount>& feature_weights() const {
    return feature_weights_;
  }
  const std::map<std::string, double>& token_weights() const {
    return token_weights_;
  }
  const Hyperparams& hyper() const { return hyper_; }
  bool trained() const { return trained_; }

  friend bool operator==(const PerceptronExtractor& a,
                         const PerceptronExtractor& b) {
    return a.feature_weights_ == b.feature_weights_ &&
           a.token_weights_ == b.token_weights_ &&
           a.utility_vocab_ == b.utility_vocab_;
  }

private:
  static double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  double score_token(const FeaturizedToken& tok) const {
    double s = 0.0;
    for (size_t f = 0; f < kFeatureCount; ++f)
      if ((tok.bits >> f) & 1u) s += feature_weights_[f];
    auto it = token_weights_.find(tok.text);
    if (it != token_weights_.end()) s += it->second;
    return s;
  }

  uint64_t payload_checksum() const {
    return fnv1a64(payload_json().dump());
  }

  nlohmann::ordered_json payload_json() const {
    nlohmann::ordered_json p;
    p["kind"] = "averaged_perceptron";
    p["epochs"] = hyper_.epochs;
    p["batch_size"] = hyper_.batch_size;
    p["averaging"] = hyper_.averaging;
    nlohmann::ordered_json fw;
    for (size_t f = 0; f < kFeatureCount; ++f)
      fw[feature_names()[f]] = feature_weights_[f];
    p["feature_weights"] = std::move(fw);
    nlohmann::ordered_json tw = nlohmann::ordered_json::object();
    for (const auto& [tok, w] : token_weights_) tw[tok] = w;
    p["token_weights"] = std::move(tw);
    p["utility_vocab"] =
        std::vector<std::string>(utility_vocab_.begin(), utility_vocab_.end());
    return p;
  }

  void from_payload(const nlohmann::ordered_json& p) {
    try {
      if (p.at("kind") != "averaged_perceptron")
        throw CorruptModel("unknown model kind");
      hyper_.epochs = p.at("epochs").get<int>();
      hyper_.batch_size = p.at("batch_size").get<int>();
      hyper_.averaging = p.at("averaging").get<bool>();
      const auto& fw = p.at("feature_weights");
      for (size_t f = 0; f < kFeatureCount; ++f)
        feature_weights_[f] = fw.at(feature_names()[f]).get<double>();
      token_weights_.clear();
      for (const auto& [tok, w] : p.at("token_weights").items())
        token_weights_[tok] = w.get<double>();
      utility_vocab_.clear();
      for (const auto& v : p.at("utility_vocab"))
        utility_vocab_.insert(v.get<std::string>());
      if (utility_vocab_.empty())
        throw CorruptModel("model has an empty utility vocabulary");
      for (double w : feature_weights_)
        if (!std::isfinite(w)) throw CorruptModel("non-finite feature weight");
    } catch (const nlohmann::json::exception& e) {
      throw CorruptModel(std::string("malformed model payload: ") + e.what());
    }
  }

  std::array<double, kFeatureCount> feature_weights_{};
  std::map<std::string, double> token_weights_;
  std::set<std::string> utility_vocab_;
  Hyperparams hyper_;
  bool trained_ = false;
};

// Averaged perceptron training. One decision per segment: pick the token
// whose basename should be that segment's utility. A wrong argmax adds 1
// to every active feature of the gold head token (and its identity) and
// subtracts 1 from the chosen token's. Weights are averaged over the
// whole update timeline, which is what the final model carries.
inline std::pair<PerceptronExtractor, TrainReport> PerceptronExtractor::train(
    const std::vector<QaExample>& train_set,
    const std::vector<QaExample>& val_set, Hyperparams hyper) {
  if (train_set.empty()) throw EmptyTrainingSet("no training examples");

  auto t0 = std::chrono::steady_clock::now();

  PerceptronExtractor model;
  model.hyper_ = hyper;
  TrainReport report;
  report.train_examples = train_set.size();
  report.val_examples = val_set.size();

  // Vocabulary comes from the gold answers, before the first epoch.
  for (const QaExample& ex : train_set) {
    std::istringstream ss(ex.answer);
    std::string tok;
    while (ss >> tok) model.utility_vocab_.insert(tok);
  }

  // Lazy-averaging bookkeeping.
  std::array<double, kFeatureCount> facc{};
  std::array<uint64_t, kFeatureCount> flast{};
  std::map<std::string, double> tacc;
  std::map<std::string, uint64_t> tlast;
  uint64_t step = 0;

  auto bump_feature = [&](size_t f, double delta) {
    facc[f] += model.feature_weights_[f] * static_cast<double>(step - 1 - flast[f]);
    flast[f] = step - 1;
    model.feature_weights_[f] += delta;
  };
  auto bump_token = [&](const std::string& tok, double delta) {
    double& w = model.token_weights_[tok];
    tacc[tok] += w * static_cast<double>(step - 1 - tlast[tok]);
    tlast[tok] = step - 1;
    w += delta;
  };

  auto averaged_snapshot = [&]() {
    PerceptronExtractor avg = model;
    if (!hyper.averaging || step == 0) {
      avg.trained_ = true;
      return avg;
    }
    double T = static_cast<double>(step);
    for (size_t f = 0; f < kFeatureCount; ++f)
      avg.feature_weights_[f] =
          (facc[f] + model.feature_weights_[f] * static_cast<double>(step - flast[f])) / T;
    for (auto& [tok, w] : avg.token_weights_) {
      uint64_t last = tlast.count(tok) ? tlast[tok] : 0;
      double acc = tacc.count(tok) ? tacc[tok] : 0.0;
      w = (acc + model.token_weights_[tok] * static_cast<double>(step - last)) / T;
    }
    avg.trained_ = true;
    return avg;
  };

  std::vector<std::string> gold_tokens;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (const QaExample& ex : train_set) {
      std::vector<FeaturizedSegment> segs =
          featurize(ex.context, model.utility_vocab_);
      size_t ntok = 0;
      for (const auto& s : segs) ntok += s.tokens.size();
      if (ntok > report.longest_context_tokens)
        report.longest_context_tokens = ntok;

      gold_tokens.clear();
      {
        std::istringstream ss(ex.answer);
        std::string tok;
        while (ss >> tok) gold_tokens.push_back(tok);
      }
      if (gold_tokens.empty()) continue;

      for (const FeaturizedSegment& seg : segs) {
        // Align the segment with its gold utility: the first token whose
        // basename appears among the gold answer tokens.
        size_t gold_idx = seg.tokens.size();
        for (size_t i = 0; i < seg.tokens.size(); ++i) {
          for (const std::string& g : gold_tokens) {
            if (seg.tokens[i].basename == g) {
              gold_idx = i;
              break;
            }
          }
          if (gold_idx != seg.tokens.size()) break;
        }
        if (gold_idx == seg.tokens.size()) continue;  // unalignable segment

        ++step;
        size_t best = 0;
        double top1 = -1e300;
        for (size_t i = 0; i < seg.tokens.size(); ++i) {
          double s = model.score_token(seg.tokens[i]);
          if (s > top1) {
            top1 = s;
            best = i;
          }
        }
        if (seg.tokens[best].basename == seg.tokens[gold_idx].basename)
          continue;

        const FeaturizedToken& gold_tok = seg.tokens[gold_idx];
        const FeaturizedToken& pred_tok = seg.tokens[best];
        for (size_t f = 0; f < kFeatureCount; ++f) {
          if (gold_tok.has(static_cast<Feature>(f))) bump_feature(f, 1.0);
          if (pred_tok.has(static_cast<Feature>(f))) bump_feature(f, -1.0);
        }
        bump_token(gold_tok.text, 1.0);
        bump_token(pred_tok.text, -1.0);
      }
    }
    ++report.epochs_run;

    if (!val_set.empty()) {
      PerceptronExtractor snapshot = averaged_snapshot();
      std::vector<std::string> preds, golds;
      preds.reserve(val_set.size());
      golds.reserve(val_set.size());
      for (const QaExample& ex : val_set) {
        preds.push_back(snapshot.predict(ex.context).answer);
        golds.push_back(ex.answer);
      }
      report.val_f1.push_back(evaluate(preds, golds).mean_f1);
    }
  }

  PerceptronExtractor final_model = averaged_snapshot();
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {std::move(final_model), std::move(report)};
}

// Loads whichever backend `spec` names: "rule" for the oracle, anything
// else is treated as a perceptron model file path.
inline std::shared_ptr<const Extractor> load_extractor(const std::string& spec) {
  if (spec == "rule") return std::make_shared<RuleOracleExtractor>();
  return std::make_shared<PerceptronExtractor>(PerceptronExtractor::load(spec));
}

}  // namespace cowlog
