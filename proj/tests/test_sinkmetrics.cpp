#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "cowlog/sinkmetrics.hpp"

using namespace cowlog;

namespace {

// Independent nearest-rank oracle in pure integer arithmetic: the value
// at the smallest rank r with r*100 > p*N.
double oracle_percentile(std::vector<double> samples, uint64_t p) {
  std::sort(samples.begin(), samples.end());
  uint64_t n = samples.size();
  uint64_t rank = 1;
  while (rank < n && rank * 100 <= p * n) ++rank;
  return samples[rank - 1];
}

Document make_doc(const std::string& eventid, int64_t ts_us,
                  const std::string& session) {
  CowrieEvent ev;
  ev.eventid = eventid;
  ev.timestamp_us = ts_us;
  ev.session = session;
  return normalize(ev, {}, 1);
}

}  // namespace

TEST_CASE("percentiles use the nearest-rank rule", "[sinkmetrics]") {
  LatencyStats s = percentiles({1, 2, 3, 4});
  CHECK(s.p95_ms == 4.0);  // ceil(0.95*4) = 4
  CHECK(s.p99_ms == 4.0);
  CHECK(s.mean_ms == 2.5);
  CHECK(s.max_ms == 4.0);

  s = percentiles({5});
  CHECK(s.mean_ms == 5.0);
  CHECK(s.p95_ms == 5.0);
  CHECK(s.p99_ms == 5.0);
  CHECK(s.max_ms == 5.0);
  CHECK(s.count == 1);

  CHECK_THROWS_AS(percentiles({}), EmptySamples);
}

TEST_CASE("one slow call in a hundred dominates p99", "[sinkmetrics]") {
  std::vector<double> samples(99, 40.0);
  samples.push_back(4000.0);
  LatencyStats s = percentiles(samples);
  CHECK(s.p99_ms == 4000.0);
  CHECK(s.p95_ms == 40.0);
  CHECK(s.p99_ms == oracle_percentile(samples, 99));
}

TEST_CASE("percentiles agree with the sort oracle", "[sinkmetrics][property]") {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 300; ++i) {
    size_t n = 1 + rng() % 200;
    std::vector<double> samples;
    for (size_t k = 0; k < n; ++k)
      samples.push_back(static_cast<double>(rng() % 100000) / 10.0);
    LatencyStats s = percentiles(samples);
    CHECK(s.p95_ms == oracle_percentile(samples, 95));
    CHECK(s.p99_ms == oracle_percentile(samples, 99));
    CHECK(s.p95_ms <= s.p99_ms);
    CHECK(s.p99_ms <= s.max_ms);
  }
}

TEST_CASE("top_k ranks by count then value", "[sinkmetrics]") {
  std::map<std::string, uint64_t> counts{{"a", 3}, {"b", 1}, {"c", 3}};
  auto top = top_k(counts, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0] == std::pair<std::string, uint64_t>{"a", 3});
  CHECK(top[1] == std::pair<std::string, uint64_t>{"c", 3});

  CHECK(top_k({}, 5).empty());
  CHECK(top_k(counts, 0).empty());
  CHECK(top_k(counts, 10).size() == 3);
}

TEST_CASE("bucket_volume floors to the epoch grid", "[sinkmetrics]") {
  int64_t day = parse_iso8601_us("2019-05-01T00:00:00Z");
  auto buckets = bucket_volume({day + 60'000'000ll,             // 00:01
                                day + (11 * 3600 + 3540) * 1000000ll},  // 11:59
                               43200);
  REQUIRE(buckets.size() == 1);
  CHECK(buckets[0].second == 2);
  CHECK(buckets[0].first == day / 1000000);

  // 12:00 exactly belongs to the afternoon bucket
  buckets = bucket_volume({day + 12 * 3600 * 1000000ll}, 43200);
  REQUIRE(buckets.size() == 1);
  CHECK(buckets[0].first == day / 1000000 + 43200);

  CHECK(bucket_volume({}, 43200).empty());
}

TEST_CASE("bucket counts add up to the document total",
          "[sinkmetrics][property]") {
  std::mt19937_64 rng(555);
  std::vector<int64_t> ts;
  for (int i = 0; i < 5000; ++i)
    ts.push_back(1556668800000000ll + int64_t(rng() % (86400ull * 30)) * 1000000ll);
  uint64_t total = 0;
  for (const auto& [start, count] : bucket_volume(ts)) total += count;
  CHECK(total == ts.size());
}

TEST_CASE("write_bulk emits alternating action and document lines",
          "[sinkmetrics]") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "cowlog_bulk_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string path = (dir / "bulk.ndjson").string();

  std::vector<Document> docs = {
      make_doc("cowrie.session.connect", 1556668800000000ll, "s1"),
      make_doc("cowrie.session.closed", 1556668860000000ll, "s1")};
  CHECK(write_bulk(docs, path) == 2);

  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].find("\"_index\":\"cowrie\"") != std::string::npos);
  CHECK(lines[0].find("\"_id\":\"" + docs[0].doc_id + "\"") !=
        std::string::npos);

  // trailing newline: file size ends with '\n'
  std::ifstream raw(path, std::ios::binary | std::ios::ate);
  auto size = raw.tellg();
  raw.seekg(static_cast<std::streamoff>(size) - 1);
  char last;
  raw.get(last);
  CHECK(last == '\n');

  CHECK(write_bulk({}, (dir / "empty.ndjson").string()) == 0);

  SECTION("round-trips through read_bulk_file") {
    auto back = read_bulk_file(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].doc_id == docs[0].doc_id);
    CHECK(back[0].event == docs[0].event);
    CHECK(back[1].event.eventid == "cowrie.session.closed");
  }
  fs::remove_all(dir);
}

TEST_CASE("render_report matches a brute-force recount", "[sinkmetrics]") {
  std::mt19937_64 rng(777);
  std::vector<Document> docs;
  const std::vector<std::string> users = {"root", "admin", "pi"};
  const std::vector<std::string> passes = {"123456", "toor"};
  const std::vector<std::string> tools = {"wget", "curl", "sh", "cd wget"};
  std::map<std::string, uint64_t> want_users, want_passes, want_tools;

  for (int i = 0; i < 2000; ++i) {
    int64_t ts = 1556668800000000ll + int64_t(rng() % 500000) * 1000000ll;
    if (rng() % 3 == 0) {
      Document d = make_doc(rng() % 2 ? "cowrie.login.failed"
                                      : "cowrie.login.success",
                            ts, "s" + std::to_string(i));
      d.event.username = users[rng() % users.size()];
      d.event.password = passes[rng() % passes.size()];
      ++want_users[*d.event.username];
      ++want_passes[*d.event.password];
      docs.push_back(std::move(d));
    } else {
      Document d = make_doc("cowrie.command.input", ts,
                            "s" + std::to_string(i));
      d.predicted_tool = tools[rng() % tools.size()];
      d.inference_latency_ms = double(rng() % 100);
      std::istringstream ss(*d.predicted_tool);
      std::string tok;
      while (ss >> tok) ++want_tools[tok];
      docs.push_back(std::move(d));
    }
  }

  DashboardReport report = render_report(docs);
  CHECK(report.top_usernames == top_k(want_users, 20));
  CHECK(report.top_passwords == top_k(want_passes, 20));
  CHECK(report.top_tools == top_k(want_tools, 20));
  CHECK(report.n_documents == docs.size());
  uint64_t volume = 0;
  for (const auto& [start, count] : report.volume_buckets) volume += count;
  CHECK(volume == docs.size());
  REQUIRE(report.latency.has_value());
  CHECK(report.latency->count > 0);
  CHECK(!report.server_latency.has_value());

  // deterministic for a fixed document set
  DashboardReport again = render_report(docs);
  CHECK(dashboard_report_to_json(again) == dashboard_report_to_json(report));
}
