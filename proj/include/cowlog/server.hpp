#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "cowlog/errors.hpp"
#include "cowlog/model.hpp"
#include "cowlog/sinkmetrics.hpp"
#include "cowlog/strutil.hpp"

namespace cowlog {

// HTTP inference service. The controller side validates requests; the
// model side holds one immutable extractor for the process lifetime and
// answers from memory. Request handling is concurrent on a bounded
// worker pool; metrics go through one mutex.

struct ServerOptions {
  int workers = 8;
  size_t max_command_bytes = 64 * 1024;
};

class InferenceServer {
public:
  explicit InferenceServer(std::shared_ptr<const Extractor> extractor,
                           ServerOptions options = {})
      : extractor_(std::move(extractor)), options_(options) {
    if (!extractor_) throw UntrainedModel("server needs a loaded extractor");
    server_.new_task_queue = [n = options_.workers] {
      return new httplib::ThreadPool(static_cast<size_t>(n));
    };
    install_routes();
  }

  // Blocking; returns when stop() is called or binding fails.
  bool listen(const std::string& host, int port) {
    return server_.listen(host, port);
  }

  // For in-process use: binds an ephemeral port, serves on a caller
  // thread via serve_after_bind().
  int bind_any_port(const std::string& host) {
    int port = server_.bind_to_any_port(host);
    if (port < 0) throw IoError("cannot bind " + host);
    return port;
  }
  bool serve_after_bind() { return server_.listen_after_bind(); }

  void stop() { server_.stop(); }
  bool is_running() const { return server_.is_running(); }
  void wait_until_ready() { server_.wait_until_ready(); }

  uint64_t request_count() const { return request_count_.load(); }
  uint64_t error_count() const { return error_count_.load(); }
  uint64_t model_load_count() const { return model_load_count_.load(); }

  nlohmann::ordered_json metrics_json() const {
    nlohmann::ordered_json j;
    j["request_count"] = request_count_.load();
    j["error_count"] = error_count_.load();
    j["model_load_count"] = model_load_count_.load();
    std::vector<double> samples;
    {
      std::lock_guard<std::mutex> lock(metrics_mutex_);
      samples = latency_samples_;
    }
    nlohmann::ordered_json lat;
    if (samples.empty()) {
      lat["count"] = 0;
      lat["mean"] = nullptr;
      lat["p95"] = nullptr;
      lat["p99"] = nullptr;
      lat["max"] = nullptr;
    } else {
      LatencyStats stats = percentiles(samples);
      lat["count"] = stats.count;
      lat["mean"] = stats.mean_ms;
      lat["p95"] = stats.p95_ms;
      lat["p99"] = stats.p99_ms;
      lat["max"] = stats.max_ms;
    }
    j["inference_latency_ms"] = std::move(lat);
    return j;
  }

  std::vector<double> latency_samples() const {
    std::lock_guard<std::mutex> lock(metrics_mutex_);
    return latency_samples_;
  }

private:
  static void reply_json(httplib::Response& res, int status,
                         const nlohmann::ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void reply_error(httplib::Response& res, int status, const std::string& why) {
    error_count_.fetch_add(1);
    reply_json(res, status, nlohmann::ordered_json{{"error", why}});
  }

  void install_routes() {
    server_.Post("/infer", [this](const httplib::Request& req,
                                  httplib::Response& res) {
      request_count_.fetch_add(1);
      std::string content_type = req.get_header_value("Content-Type");
      if (content_type.find("application/json") == std::string::npos) {
        reply_error(res, 415, "content type must be application/json");
        return;
      }
      if (req.body.size() > options_.max_command_bytes + 4096) {
        reply_error(res, 400, "request body too large");
        return;
      }
      nlohmann::json j = nlohmann::json::parse(req.body, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        reply_error(res, 400, "body is not a JSON object");
        return;
      }
      auto it = j.find("command");
      if (it == j.end() || !it->is_string()) {
        reply_error(res, 400, "missing string field 'command'");
        return;
      }
      std::string command = it->get<std::string>();
      if (command.size() > options_.max_command_bytes) {
        reply_error(res, 400, "command exceeds 64 KiB");
        return;
      }
      if (trim_view(command).empty()) {
        reply_error(res, 400, "command is empty");
        return;
      }

      try {
        auto t0 = std::chrono::steady_clock::now();
        Prediction pred = extractor_->predict(command);
        double latency_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
        {
          std::lock_guard<std::mutex> lock(metrics_mutex_);
          latency_samples_.push_back(latency_ms);
        }
        nlohmann::ordered_json body;
        body["prediction"] = pred.answer;
        body["score"] = pred.score;
        body["model_version"] = extractor_->version();
        body["latency_ms"] = latency_ms;
        reply_json(res, 200, body);
      } catch (const std::exception&) {
        // opaque on purpose: internals never leak to clients
        reply_error(res, 500, "internal error");
      }
    });

    auto method_not_allowed = [this](const httplib::Request&,
                                     httplib::Response& res) {
      request_count_.fetch_add(1);
      reply_error(res, 405, "method not allowed, POST only");
    };
    server_.Get("/infer", method_not_allowed);
    server_.Put("/infer", method_not_allowed);
    server_.Delete("/infer", method_not_allowed);
    server_.Patch("/infer", method_not_allowed);

    server_.Get("/health", [this](const httplib::Request&,
                                  httplib::Response& res) {
      nlohmann::ordered_json body{{"status", "ok"},
                                  {"model_version", extractor_->version()}};
      reply_json(res, 200, body);
    });

    server_.Get("/metrics", [this](const httplib::Request&,
                                   httplib::Response& res) {
      reply_json(res, 200, metrics_json());
    });
  }

  std::shared_ptr<const Extractor> extractor_;
  ServerOptions options_;
  httplib::Server server_;
  std::atomic<uint64_t> request_count_{0};
  std::atomic<uint64_t> error_count_{0};
  std::atomic<uint64_t> model_load_count_{1};  // the extractor is loaded once, before traffic
  mutable std::mutex metrics_mutex_;
  std::vector<double> latency_samples_;
};

}  // namespace cowlog
