#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>
#include <thread>

#include "cowlog/bulkhttp.hpp"
#include "cowlog/loggen.hpp"
#include "cowlog/model.hpp"
#include "cowlog/pipeline.hpp"
#include "cowlog/server.hpp"

using namespace cowlog;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

struct BackgroundServer {
  InferenceServer server;
  std::thread thread;
  int port;
  explicit BackgroundServer(std::shared_ptr<const Extractor> extractor)
      : server(std::move(extractor)) {
    port = server.bind_any_port("127.0.0.1");
    thread = std::thread([this] { server.serve_after_bind(); });
    server.wait_until_ready();
  }
  ~BackgroundServer() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_CASE("bounded queue delivers in order and drains on close", "[pipeline]") {
  BoundedQueue<int> q(4);
  std::thread producer([&] {
    for (int i = 0; i < 100; ++i) q.push(i);  // blocks on the bound
    q.close();
  });
  std::vector<int> got;
  while (auto v = q.pop()) got.push_back(*v);
  producer.join();
  REQUIRE(got.size() == 100);
  for (int i = 0; i < 100; ++i) CHECK(got[i] == i);
  CHECK(!q.push(1));  // closed
}

TEST_CASE("glob matches shell-style patterns", "[pipeline]") {
  TempDir dir("cowlog_glob_test");
  std::ofstream(dir.file("cowrie.json.2019-05-01")) << "";
  std::ofstream(dir.file("cowrie.json.2019-05-02")) << "";
  std::ofstream(dir.file("other.txt")) << "";
  auto files = glob_files((dir.path / "cowrie.json.*").string());
  REQUIRE(files.size() == 2);
  CHECK(files[0] < files[1]);
  CHECK(glob_files((dir.path / "nope.*").string()).empty());
}

TEST_CASE("pipeline config loads from JSON with overrides", "[pipeline]") {
  TempDir dir("cowlog_cfg_test");
  std::ofstream(dir.file("config.json"))
      << R"({"log_glob":"x/*.json","poll_ms":25,"workers":2,"drop_fields":["a","b"]})";
  PipelineConfig cfg = load_pipeline_config(dir.file("config.json"));
  CHECK(cfg.log_glob == "x/*.json");
  CHECK(cfg.poll_ms == 25);
  CHECK(cfg.workers == 2);
  CHECK(cfg.drop_fields == std::vector<std::string>{"a", "b"});
  CHECK(cfg.infer_timeout_ms == 5000);  // untouched default

  std::ofstream(dir.file("bad.json")) << "{nope";
  CHECK_THROWS_AS(load_pipeline_config(dir.file("bad.json")), MalformedJson);
  CHECK_THROWS_AS(load_pipeline_config(dir.file("missing.json")), IoError);
}

TEST_CASE("end-to-end mini run conserves every event", "[pipeline]") {
  TempDir dir("cowlog_e2e_mini");
  GeneratorConfig gen_cfg = default_generator_config();
  gen_cfg.seed = 11;
  gen_cfg.n_sessions = 60;
  gen_cfg.n_days = 3;
  CorpusResult corpus = generate_corpus(gen_cfg, dir.file("logs"));
  REQUIRE(corpus.n_events > 0);

  BackgroundServer bs(std::make_shared<RuleOracleExtractor>());

  PipelineConfig cfg;
  cfg.log_glob = dir.file("logs") + "/cowrie.json.*";
  cfg.state_path = dir.file("state.json");
  cfg.infer_url = "http://127.0.0.1:" + std::to_string(bs.port);
  cfg.bulk_path = dir.file("bulk.ndjson");
  cfg.report_path = dir.file("report.json");
  cfg.workers = 3;

  std::atomic<bool> stop{false};
  PipelineStats stats;
  run_pipeline(cfg, stop, /*once=*/true, stats);

  CHECK(stats.lines_in.load() == corpus.n_events);
  CHECK(stats.parse_drops.load() == 0);
  CHECK(stats.direct.load() + stats.to_inference.load() == corpus.n_events);
  CHECK(stats.to_inference.load() == corpus.labels.size());
  CHECK(stats.enriched.load() == stats.to_inference.load());
  CHECK(stats.inference_errors.load() == 0);
  CHECK(stats.written.load() == corpus.n_events);

  std::vector<Document> docs = read_bulk_file(cfg.bulk_path);
  REQUIRE(docs.size() == corpus.n_events);
  size_t enriched_count = 0;
  for (const Document& doc : docs) {
    if (doc.event.kind() == EventKind::CommandInput) {
      REQUIRE(doc.predicted_tool.has_value());
      REQUIRE(doc.prediction_score.has_value());
      REQUIRE(doc.inference_latency_ms.has_value());
      ++enriched_count;
    }
  }
  CHECK(enriched_count == corpus.labels.size());

  SECTION("re-run over the same logs yields identical doc ids") {
    PipelineConfig cfg2 = cfg;
    cfg2.state_path = dir.file("state2.json");
    cfg2.bulk_path = dir.file("bulk2.ndjson");
    PipelineStats stats2;
    std::atomic<bool> stop2{false};
    run_pipeline(cfg2, stop2, true, stats2);
    std::vector<Document> docs2 = read_bulk_file(cfg2.bulk_path);
    REQUIRE(docs2.size() == docs.size());
    std::multiset<std::string> ids1, ids2;
    for (const auto& d : docs) ids1.insert(d.doc_id);
    for (const auto& d : docs2) ids2.insert(d.doc_id);
    CHECK(ids1 == ids2);
  }

  SECTION("a second once-run with the committed state reads nothing new") {
    PipelineStats stats3;
    std::atomic<bool> stop3{false};
    run_pipeline(cfg, stop3, true, stats3);
    CHECK(stats3.lines_in.load() == 0);
  }
}

TEST_CASE("dead inference service degrades to inference_error", "[pipeline]") {
  TempDir dir("cowlog_e2e_dead");
  GeneratorConfig gen_cfg = default_generator_config();
  gen_cfg.seed = 5;
  gen_cfg.n_sessions = 10;
  gen_cfg.n_days = 2;
  CorpusResult corpus = generate_corpus(gen_cfg, dir.file("logs"));

  PipelineConfig cfg;
  cfg.log_glob = dir.file("logs") + "/cowrie.json.*";
  cfg.state_path = dir.file("state.json");
  cfg.infer_url = "http://127.0.0.1:1";  // nothing listens here
  cfg.infer_timeout_ms = 200;
  cfg.infer_retries = 1;
  cfg.infer_backoff_ms = 10;
  cfg.bulk_path = dir.file("bulk.ndjson");
  cfg.workers = 2;

  std::atomic<bool> stop{false};
  PipelineStats stats;
  run_pipeline(cfg, stop, true, stats);

  CHECK(stats.lines_in.load() == corpus.n_events);
  CHECK(stats.written.load() == corpus.n_events);  // nothing silently lost
  CHECK(stats.inference_errors.load() == stats.to_inference.load());
  CHECK(stats.enriched.load() == 0);

  size_t flagged = 0;
  for (const Document& doc : read_bulk_file(cfg.bulk_path)) {
    if (doc.event.kind() == EventKind::CommandInput) {
      REQUIRE(doc.inference_error.has_value());
      CHECK(!doc.predicted_tool.has_value());
      ++flagged;
    }
  }
  CHECK(flagged == stats.to_inference.load());
}
