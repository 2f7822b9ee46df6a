#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cowlog/model.hpp"
#include "cowlog/schema.hpp"
#include "cowlog/strutil.hpp"
#include "cowlog/timeutil.hpp"

namespace cowlog {

// Logstash analog: normalize events into indexable documents, decide
// which ones go to the inference service and attach its answers.

inline const std::vector<std::string>& default_drop_fields() {
  // Shipper bookkeeping that has no forensic value once indexed.
  static const std::vector<std::string> kFields = {
      "log.file.path", "log.file.offset", "log.offset", "source", "prospector"};
  return kFields;
}

struct TransformOptions {
  std::vector<std::string> drop_fields = default_drop_fields();
};

struct Document {
  CowrieEvent event;  // normalized
  std::string doc_id;
  std::optional<std::string> predicted_tool;
  std::optional<double> prediction_score;
  std::optional<double> inference_latency_ms;  // transform-side round trip
  std::optional<double> server_latency_ms;     // server-reported inference time
  std::optional<std::string> inference_error;
  bool unparseable_command = false;
  bool score_clamped = false;
  int64_t pipeline_ts_us = 0;
};

enum class Route { ToInference, Direct, Drop };

struct RouteDecision {
  Route route = Route::Direct;
  std::string reason;
};

inline int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// Stable content hash: same event, same id, on every run and platform.
inline std::string compute_doc_id(const CowrieEvent& ev) {
  uint64_t h = fnv1a64(ev.session);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(format_iso8601_us(ev.timestamp_us), h);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(ev.eventid, h);
  h = fnv1a64("\x1f", h);
  if (ev.input) h = fnv1a64(*ev.input, h);
  return hex64(h);
}

inline Document normalize(const CowrieEvent& event,
                          const TransformOptions& options = {},
                          int64_t pipeline_ts_us = 0) {
  Document doc;
  doc.event = event;
  for (const std::string& field : options.drop_fields) doc.event.extra.erase(field);
  doc.doc_id = compute_doc_id(doc.event);
  doc.pipeline_ts_us = pipeline_ts_us != 0 ? pipeline_ts_us : now_us();
  return doc;
}

// Pure function of the document. Command events with a recoverable
// command go to inference; a command event with nothing recoverable is
// indexed directly (the pipeline flags it unparseable).
inline RouteDecision route(const Document& doc) {
  if (doc.event.eventid.empty()) return {Route::Drop, "missing_eventid"};
  if (doc.event.kind() != EventKind::CommandInput) return {Route::Direct, ""};
  try {
    extract_command(doc.event);
  } catch (const Error&) {
    return {Route::Direct, "unparseable_command"};
  }
  return {Route::ToInference, ""};
}

inline Document enrich(Document doc, const Prediction& prediction,
                       double latency_ms,
                       std::optional<double> server_latency_ms = std::nullopt) {
  doc.predicted_tool = prediction.answer;
  double score = prediction.score;
  if (score < 0.0 || score > 1.0) {
    score = score < 0.0 ? 0.0 : 1.0;
    doc.score_clamped = true;
  }
  doc.prediction_score = score;
  doc.inference_latency_ms = latency_ms < 0.0 ? 0.0 : latency_ms;
  doc.server_latency_ms = server_latency_ms;
  return doc;
}

inline nlohmann::ordered_json document_to_json(const Document& doc) {
  nlohmann::ordered_json j =
      nlohmann::ordered_json::parse(serialize_event(doc.event));
  j["pipeline_ts"] = format_iso8601_us(doc.pipeline_ts_us);
  if (doc.predicted_tool) j["predicted_tool"] = *doc.predicted_tool;
  if (doc.prediction_score) j["prediction_score"] = *doc.prediction_score;
  if (doc.inference_latency_ms)
    j["inference_latency_ms"] = *doc.inference_latency_ms;
  if (doc.server_latency_ms) j["server_latency_ms"] = *doc.server_latency_ms;
  if (doc.inference_error) j["inference_error"] = *doc.inference_error;
  if (doc.unparseable_command) j["unparseable_command"] = true;
  if (doc.score_clamped) j["score_clamped"] = true;
  return j;
}

inline Document document_from_json(const nlohmann::json& in,
                                   std::string doc_id = "") {
  nlohmann::json j = in;
  Document doc;
  doc.doc_id = std::move(doc_id);
  auto take_double = [&](const char* key, std::optional<double>& dst) {
    auto it = j.find(key);
    if (it != j.end() && it->is_number()) {
      dst = it->get<double>();
      j.erase(it);
    }
  };
  auto it = j.find("pipeline_ts");
  if (it != j.end() && it->is_string()) {
    doc.pipeline_ts_us = parse_iso8601_us(it->get<std::string>());
    j.erase(it);
  }
  it = j.find("predicted_tool");
  if (it != j.end() && it->is_string()) {
    doc.predicted_tool = it->get<std::string>();
    j.erase(it);
  }
  take_double("prediction_score", doc.prediction_score);
  take_double("inference_latency_ms", doc.inference_latency_ms);
  take_double("server_latency_ms", doc.server_latency_ms);
  it = j.find("inference_error");
  if (it != j.end() && it->is_string()) {
    doc.inference_error = it->get<std::string>();
    j.erase(it);
  }
  it = j.find("unparseable_command");
  if (it != j.end()) {
    doc.unparseable_command = it->is_boolean() && it->get<bool>();
    j.erase(it);
  }
  it = j.find("score_clamped");
  if (it != j.end()) {
    doc.score_clamped = it->is_boolean() && it->get<bool>();
    j.erase(it);
  }
  doc.event = parse_event(j.dump());
  return doc;
}

}  // namespace cowlog
