#pragma once

#include <fnmatch.h>

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cowlog/errors.hpp"
#include "cowlog/inferclient.hpp"
#include "cowlog/ingest.hpp"
#include "cowlog/schema.hpp"
#include "cowlog/sinkmetrics.hpp"
#include "cowlog/transform.hpp"

namespace cowlog {

// Staged run loop: tailer -> bounded queue -> transform workers ->
// bounded queue -> sink flusher. Producers block when a queue is full;
// shutdown drains in stage order so counts are conserved.

template <typename T>
class BoundedQueue {
public:
  explicit BoundedQueue(size_t capacity) : capacity_(capacity) {}

  // Returns false only when the queue was closed.
  bool push(T item) {
    std::unique_lock<std::mutex> lock(mutex_);
    not_full_.wait(lock, [&] { return queue_.size() < capacity_ || closed_; });
    if (closed_) return false;
    queue_.push(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  // Blocks until an item is available; empty optional once closed and drained.
  std::optional<T> pop() {
    std::unique_lock<std::mutex> lock(mutex_);
    not_empty_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    T item = std::move(queue_.front());
    queue_.pop();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard<std::mutex> lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

private:
  size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_full_, not_empty_;
  std::queue<T> queue_;
  bool closed_ = false;
};

struct PipelineConfig {
  std::string log_glob = "logs/cowrie.json.*";
  std::string state_path = "cowlog.state.json";
  std::string infer_url = "http://127.0.0.1:8700";
  int infer_timeout_ms = 5000;
  int infer_retries = 2;
  int infer_backoff_ms = 250;
  std::string model_path;  // serve only; "rule" selects the oracle backend
  std::string bulk_path = "bulk.ndjson";
  std::string index_name = "cowrie";
  std::string report_path = "report.json";
  std::vector<std::string> drop_fields = default_drop_fields();
  int poll_ms = 500;
  int workers = 4;
  int bucket_hours = 12;
  int top_k = 20;
  uint64_t seed = 1;
  std::string bind = "127.0.0.1:8700";
};

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                                PipelineConfig base = {}) {
  if (!j.is_object()) throw Error("config file must hold a JSON object");
  base.log_glob = j.value("log_glob", base.log_glob);
  base.state_path = j.value("state_path", base.state_path);
  base.infer_url = j.value("infer_url", base.infer_url);
  base.infer_timeout_ms = j.value("infer_timeout_ms", base.infer_timeout_ms);
  base.infer_retries = j.value("infer_retries", base.infer_retries);
  base.infer_backoff_ms = j.value("infer_backoff_ms", base.infer_backoff_ms);
  base.model_path = j.value("model_path", base.model_path);
  base.bulk_path = j.value("bulk_path", base.bulk_path);
  base.index_name = j.value("index_name", base.index_name);
  base.report_path = j.value("report_path", base.report_path);
  if (j.contains("drop_fields")) {
    base.drop_fields.clear();
    for (const auto& f : j.at("drop_fields"))
      base.drop_fields.push_back(f.get<std::string>());
  }
  base.poll_ms = j.value("poll_ms", base.poll_ms);
  base.workers = j.value("workers", base.workers);
  base.bucket_hours = j.value("bucket_hours", base.bucket_hours);
  base.top_k = j.value("top_k", base.top_k);
  base.seed = j.value("seed", base.seed);
  base.bind = j.value("bind", base.bind);
  return base;
}

inline PipelineConfig load_pipeline_config(const std::string& path,
                                           PipelineConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw MalformedJson("config file " + path);
  return pipeline_config_from_json(j, std::move(base));
}

// Glob over the parent directory of the pattern; filenames are matched
// with fnmatch so "logs/cowrie.json.*" behaves like a shell.
inline std::vector<std::string> glob_files(const std::string& pattern) {
  namespace fs = std::filesystem;
  fs::path p(pattern);
  fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  std::string name_pattern = p.filename().string();
  std::vector<std::string> matches;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (::fnmatch(name_pattern.c_str(), name.c_str(), 0) == 0)
      matches.push_back(entry.path().string());
  }
  std::sort(matches.begin(), matches.end());
  return matches;
}

struct PipelineStats {
  std::atomic<uint64_t> lines_in{0};
  std::atomic<uint64_t> parse_drops{0};
  std::atomic<uint64_t> direct{0};
  std::atomic<uint64_t> to_inference{0};
  std::atomic<uint64_t> enriched{0};
  std::atomic<uint64_t> inference_errors{0};
  std::atomic<uint64_t> written{0};

  nlohmann::ordered_json to_json() const {
    return {{"lines_in", lines_in.load()},
            {"parse_drops", parse_drops.load()},
            {"direct", direct.load()},
            {"to_inference", to_inference.load()},
            {"enriched", enriched.load()},
            {"inference_errors", inference_errors.load()},
            {"written", written.load()}};
  }
};

// Runs the staged pipeline until `stop` flips (or, in once mode, until
// the matched files are drained). Offsets are committed after the sink
// has flushed everything, keeping the at-least-once contract.
inline void run_pipeline(const PipelineConfig& config,
                         std::atomic<bool>& stop, bool once,
                         PipelineStats& stats) {
  BoundedQueue<std::string> line_queue(4096);
  BoundedQueue<Document> doc_queue(4096);

  TransformOptions transform_options;
  transform_options.drop_fields = config.drop_fields;

  std::map<std::string, TailState> tails;
  StateStore store(config.state_path);

  std::thread tailer([&] {
    while (true) {
      size_t batch = 0;
      for (const std::string& path : glob_files(config.log_glob)) {
        if (!tails.count(path)) tails[path] = open_tail(path, store);
        for (std::string& line : poll_lines(tails[path])) {
          ++batch;
          stats.lines_in.fetch_add(1);
          if (!line_queue.push(std::move(line))) return;
        }
      }
      if (once && batch == 0) break;
      if (stop.load()) break;
      if (!once)
        std::this_thread::sleep_for(std::chrono::milliseconds(config.poll_ms));
    }
    line_queue.close();
  });

  std::vector<std::thread> workers;
  for (int w = 0; w < std::max(1, config.workers); ++w) {
    workers.emplace_back([&] {
      InferenceClientOptions client_options;
      client_options.url = config.infer_url;
      client_options.timeout_ms = config.infer_timeout_ms;
      client_options.retries = config.infer_retries;
      client_options.backoff_ms = config.infer_backoff_ms;
      InferenceClient client(client_options);

      while (auto line = line_queue.pop()) {
        CowrieEvent event;
        try {
          event = parse_event(*line);
        } catch (const Error&) {
          stats.parse_drops.fetch_add(1);
          continue;
        }
        Document doc = normalize(event, transform_options);
        RouteDecision decision = route(doc);
        if (decision.route == Route::Drop) {
          stats.parse_drops.fetch_add(1);
          continue;
        }
        if (decision.route == Route::Direct) {
          stats.direct.fetch_add(1);
          if (decision.reason == "unparseable_command")
            doc.unparseable_command = true;
          doc_queue.push(std::move(doc));
          continue;
        }
        stats.to_inference.fetch_add(1);
        try {
          std::string command = extract_command(doc.event);
          InferenceResult result = client.infer(command);
          doc = enrich(std::move(doc), result.prediction, result.round_trip_ms,
                       result.server_latency_ms);
          stats.enriched.fetch_add(1);
        } catch (const Error& e) {
          doc.inference_error = e.what();
          stats.inference_errors.fetch_add(1);
        }
        doc_queue.push(std::move(doc));
      }
    });
  }

  std::thread joiner([&] {
    for (auto& worker : workers) worker.join();
    doc_queue.close();
  });

  // Sink flusher runs on this thread.
  BulkOptions bulk_options;
  bulk_options.index = config.index_name;
  std::vector<Document> batch;
  batch.reserve(512);
  auto flush = [&] {
    if (batch.empty()) return;
    stats.written.fetch_add(write_bulk(batch, config.bulk_path, bulk_options));
    batch.clear();
  };
  while (auto doc = doc_queue.pop()) {
    batch.push_back(std::move(*doc));
    if (batch.size() >= 512) flush();
  }
  flush();

  tailer.join();
  joiner.join();

  // Everything the tailer handed over has been flushed; committing the
  // offsets now preserves at-least-once delivery across crashes.
  for (const auto& [path, state] : tails) commit_offset(state, store);
}

}  // namespace cowlog
