#pragma once

#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "cowlog/errors.hpp"
#include "cowlog/sinkmetrics.hpp"

namespace cowlog {

struct BulkHttpDestination {
  std::string url;             // e.g. http://127.0.0.1:9200
  std::string endpoint = "/_bulk";
  BulkOptions bulk;
  int retries = 3;
  int backoff_ms = 250;
  std::string dead_letter_path;  // batch lands here when retries run out
};

// Ships one batch to an HTTP bulk endpoint. On exhausted retries the
// batch is appended to the dead-letter file before HttpError is raised,
// so no document is silently lost.
inline size_t write_bulk_http(const std::vector<Document>& documents,
                              const BulkHttpDestination& dest) {
  if (documents.empty()) return 0;
  std::string payload = bulk_payload(documents, dest.bulk);
  httplib::Client client(dest.url);
  std::string last_error = "unknown";
  for (int attempt = 0; attempt <= dest.retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(dest.backoff_ms));
    httplib::Result res =
        client.Post(dest.endpoint, payload, "application/x-ndjson");
    if (!res) {
      last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status >= 200 && res->status < 300) return documents.size();
    last_error = "status " + std::to_string(res->status);
  }
  if (!dest.dead_letter_path.empty()) {
    std::ofstream out(dest.dead_letter_path, std::ios::app | std::ios::binary);
    if (out) out << payload;
  }
  throw HttpError("bulk POST to " + dest.url + dest.endpoint + " failed (" +
                  last_error + "), batch dead-lettered");
}

}  // namespace cowlog
