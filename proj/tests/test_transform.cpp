#include <catch2/catch_amalgamated.hpp>

#include "cowlog/transform.hpp"

using namespace cowlog;

namespace {

CowrieEvent command_event(const std::string& input) {
  CowrieEvent ev;
  ev.eventid = "cowrie.command.input";
  ev.timestamp_us = parse_iso8601_us("2019-05-01T10:00:00Z");
  ev.session = "s1";
  ev.src_ip = "1.2.3.4";
  ev.message = "CMD: " + input;
  ev.input = input;
  return ev;
}

}  // namespace

TEST_CASE("normalize drops shipper fields and stamps a doc id", "[transform]") {
  CowrieEvent ev = command_event("wget x");
  ev.extra.emplace("log.file.path", "/var/log/cowrie.json");
  ev.extra.emplace("ttylog", "keep-me");
  Document doc = normalize(ev);
  CHECK(doc.event.extra.count("log.file.path") == 0);
  CHECK(doc.event.extra.count("ttylog") == 1);
  CHECK(doc.doc_id.size() == 16);
  CHECK(doc.pipeline_ts_us > 0);

  Document again = normalize(ev);
  CHECK(again.doc_id == doc.doc_id);  // stable under re-processing

  CowrieEvent other = ev;
  other.session = "s2";
  CHECK(normalize(other).doc_id != doc.doc_id);
}

TEST_CASE("normalize canonicalizes offset timestamps", "[transform]") {
  CowrieEvent ev = command_event("ls");
  ev.timestamp_us = parse_iso8601_us("2019-05-01T10:00:00+02:00");
  Document doc = normalize(ev);
  CHECK(format_iso8601_us(doc.event.timestamp_us) ==
        "2019-05-01T08:00:00.000000Z");
}

TEST_CASE("route sends recoverable commands to inference", "[transform]") {
  Document doc = normalize(command_event("wget x"));
  CHECK(route(doc).route == Route::ToInference);

  CowrieEvent login;
  login.eventid = "cowrie.login.failed";
  login.timestamp_us = 1;
  CHECK(route(normalize(login)).route == Route::Direct);

  CowrieEvent degenerate;
  degenerate.eventid = "cowrie.command.input";
  degenerate.timestamp_us = 1;
  degenerate.message = "CMD: ";
  RouteDecision d = route(normalize(degenerate));
  CHECK(d.route == Route::Direct);
  CHECK(d.reason == "unparseable_command");

  // pure function: same document, same answer
  CHECK(route(doc).route == route(doc).route);
}

TEST_CASE("enrich attaches prediction fields together", "[transform]") {
  Document doc = normalize(command_event("wget http://a/b"));
  Document enriched = enrich(doc, Prediction{"wget", 0.97}, 12.5, 3.25);
  CHECK(enriched.predicted_tool == "wget");
  CHECK(enriched.prediction_score == 0.97);
  CHECK(enriched.inference_latency_ms == 12.5);
  CHECK(enriched.server_latency_ms == 3.25);
  CHECK(!enriched.score_clamped);
  CHECK(enriched.event == doc.event);  // original fields untouched

  Document twice = enrich(enriched, Prediction{"wget", 0.97}, 12.5, 3.25);
  CHECK(document_to_json(twice) == document_to_json(enriched));  // idempotent
}

TEST_CASE("faulty backend scores are clamped and flagged", "[transform]") {
  Document doc = normalize(command_event("ls"));
  Document hi = enrich(doc, Prediction{"ls", 1.7}, 1.0);
  CHECK(hi.prediction_score == 1.0);
  CHECK(hi.score_clamped);
  Document lo = enrich(doc, Prediction{"ls", -0.3}, 1.0);
  CHECK(lo.prediction_score == 0.0);
  CHECK(lo.score_clamped);
  std::string text = document_to_json(hi).dump();
  CHECK(text.find("\"score_clamped\":true") != std::string::npos);
}

TEST_CASE("documents round-trip through JSON", "[transform]") {
  CowrieEvent ev = command_event("cd /tmp && wget u");
  ev.extra.emplace("duration", 12);
  Document doc = normalize(ev, {}, 1700000000000000ll);
  doc = enrich(doc, Prediction{"cd wget", 0.9}, 8.0, 2.0);

  nlohmann::ordered_json j = document_to_json(doc);
  Document back = document_from_json(j, doc.doc_id);
  CHECK(back.event == doc.event);
  CHECK(back.doc_id == doc.doc_id);
  CHECK(back.predicted_tool == doc.predicted_tool);
  CHECK(back.prediction_score == doc.prediction_score);
  CHECK(back.inference_latency_ms == doc.inference_latency_ms);
  CHECK(back.server_latency_ms == doc.server_latency_ms);
  CHECK(back.pipeline_ts_us == doc.pipeline_ts_us);

  Document failed = normalize(ev);
  failed.inference_error = "inference failed after 3 attempts";
  nlohmann::ordered_json jf = document_to_json(failed);
  Document back_failed = document_from_json(jf, failed.doc_id);
  CHECK(back_failed.inference_error == failed.inference_error);
}
