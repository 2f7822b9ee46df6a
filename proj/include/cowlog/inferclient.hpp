#pragma once

#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cowlog/errors.hpp"
#include "cowlog/model.hpp"

namespace cowlog {

struct InferenceClientOptions {
  std::string url = "http://127.0.0.1:8700";
  int timeout_ms = 5000;  // exceeds the ~4 s tail the service can show
  int retries = 2;        // attempts after the first try
  int backoff_ms = 250;
};

struct InferenceResult {
  Prediction prediction;
  std::string model_version;
  double round_trip_ms = 0.0;  // measured here, request to response
  double server_latency_ms = 0.0;  // as reported by the service
};

// Not thread-safe; give each transform worker its own client.
class InferenceClient {
public:
  explicit InferenceClient(InferenceClientOptions options = {})
      : options_(std::move(options)), client_(options_.url) {
    client_.set_connection_timeout(0, options_.timeout_ms * 1000);
    client_.set_read_timeout(options_.timeout_ms / 1000,
                             (options_.timeout_ms % 1000) * 1000);
    client_.set_write_timeout(options_.timeout_ms / 1000,
                              (options_.timeout_ms % 1000) * 1000);
  }

  // Throws HttpError once the bounded retries are exhausted.
  InferenceResult infer(const std::string& command) {
    std::string last_error = "unknown";
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(
            std::chrono::milliseconds(options_.backoff_ms));
      auto t0 = std::chrono::steady_clock::now();
      nlohmann::json body{{"command", command}};
      httplib::Result res =
          client_.Post("/infer", body.dump(), "application/json");
      double rtt = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
      if (!res) {
        last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
        continue;
      }
      if (res->status != 200) {
        last_error = "status " + std::to_string(res->status);
        // 4xx will not improve on retry
        if (res->status >= 400 && res->status < 500)
          throw HttpError("inference rejected: " + last_error);
        continue;
      }
      nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded() || !j.contains("prediction") || !j.contains("score")) {
        last_error = "malformed response body";
        continue;
      }
      InferenceResult out;
      out.prediction.answer = j["prediction"].get<std::string>();
      out.prediction.score = j["score"].get<double>();
      out.model_version = j.value("model_version", std::string{});
      out.server_latency_ms = j.value("latency_ms", 0.0);
      out.round_trip_ms = rtt;
      return out;
    }
    throw HttpError("inference failed after " +
                    std::to_string(options_.retries + 1) + " attempts: " +
                    last_error);
  }

private:
  InferenceClientOptions options_;
  httplib::Client client_;
};

}  // namespace cowlog
