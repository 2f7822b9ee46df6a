#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cowlog/errors.hpp"
#include "cowlog/timeutil.hpp"
#include "cowlog/transform.hpp"

namespace cowlog {

// Bulk NDJSON output (Elasticsearch wire shape) and the aggregates
// behind the five dashboard panels.

struct LatencyStats {
  size_t count = 0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
};

// Nearest-rank percentiles. The p-th percentile is the sorted sample at
// the smallest 1-based rank strictly above p percent of the count,
// i.e. floor(p*N/100) + 1 capped at N. With one 4000 ms sample among
// 100, p99 lands on the outlier.
inline LatencyStats percentiles(std::vector<double> samples) {
  if (samples.empty()) throw EmptySamples("no latency samples");
  std::sort(samples.begin(), samples.end());
  const size_t n = samples.size();
  auto nearest_rank = [&](double p) {
    double x = p * static_cast<double>(n) / 100.0;
    size_t rank = static_cast<size_t>(std::floor(x)) + 1;
    if (rank > n) rank = n;
    return samples[rank - 1];
  };
  LatencyStats stats;
  stats.count = n;
  double sum = 0.0;
  for (double v : samples) sum += v;
  stats.mean_ms = sum / static_cast<double>(n);
  stats.p95_ms = nearest_rank(95.0);
  stats.p99_ms = nearest_rank(99.0);
  stats.max_ms = samples.back();
  return stats;
}

// Top k by count, ties broken by value ascending.
inline std::vector<std::pair<std::string, uint64_t>> top_k(
    const std::map<std::string, uint64_t>& counts, size_t k) {
  std::vector<std::pair<std::string, uint64_t>> entries(counts.begin(),
                                                        counts.end());
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  if (entries.size() > k) entries.resize(k);
  return entries;
}

// Buckets aligned to the epoch grid: floor(epoch_s / width_s) * width_s.
// Only non-empty buckets are returned, ascending.
inline std::vector<std::pair<int64_t, uint64_t>> bucket_volume(
    const std::vector<int64_t>& timestamps_us, int64_t width_s = 43200) {
  if (width_s <= 0) throw Error("bucket width must be positive");
  std::map<int64_t, uint64_t> buckets;
  for (int64_t ts_us : timestamps_us) {
    int64_t secs = ts_us / 1000000;
    if (ts_us < 0 && ts_us % 1000000 != 0) --secs;
    int64_t q = secs / width_s;
    if (secs < 0 && secs % width_s != 0) --q;
    ++buckets[q * width_s];
  }
  return {buckets.begin(), buckets.end()};
}

struct DashboardReport {
  std::vector<std::pair<std::string, uint64_t>> top_usernames;
  std::vector<std::pair<std::string, uint64_t>> top_passwords;
  std::vector<std::pair<std::string, uint64_t>> top_tools;
  std::vector<std::pair<int64_t, uint64_t>> volume_buckets;  // start epoch seconds
  std::optional<LatencyStats> latency;         // transform-side round trip
  std::optional<LatencyStats> server_latency;  // server-reported inference time
  size_t n_documents = 0;
};

struct ReportOptions {
  size_t top_k = 20;
  int64_t bucket_hours = 12;
};

// Usernames/passwords come from login events, tools from the model's
// predictions (each whitespace token of an answer counts once), volume
// from every document.
inline DashboardReport render_report(const std::vector<Document>& documents,
                                     ReportOptions options = {}) {
  std::map<std::string, uint64_t> usernames, passwords, tools;
  std::vector<int64_t> timestamps;
  std::vector<double> latencies, server_latencies;
  timestamps.reserve(documents.size());

  for (const Document& doc : documents) {
    const CowrieEvent& ev = doc.event;
    timestamps.push_back(ev.timestamp_us);
    if (ev.is_login_event()) {
      if (ev.username) ++usernames[*ev.username];
      if (ev.password) ++passwords[*ev.password];
    }
    if (doc.predicted_tool) {
      std::istringstream ss(*doc.predicted_tool);
      std::string tok;
      while (ss >> tok) ++tools[tok];
    }
    if (doc.inference_latency_ms) latencies.push_back(*doc.inference_latency_ms);
    if (doc.server_latency_ms) server_latencies.push_back(*doc.server_latency_ms);
  }

  DashboardReport report;
  report.n_documents = documents.size();
  report.top_usernames = top_k(usernames, options.top_k);
  report.top_passwords = top_k(passwords, options.top_k);
  report.top_tools = top_k(tools, options.top_k);
  report.volume_buckets = bucket_volume(timestamps, options.bucket_hours * 3600);
  if (!latencies.empty()) report.latency = percentiles(latencies);
  if (!server_latencies.empty())
    report.server_latency = percentiles(server_latencies);
  return report;
}

inline nlohmann::ordered_json latency_stats_to_json(const LatencyStats& s) {
  return {{"count", s.count},
          {"mean_ms", s.mean_ms},
          {"p95_ms", s.p95_ms},
          {"p99_ms", s.p99_ms},
          {"max_ms", s.max_ms}};
}

inline nlohmann::ordered_json dashboard_report_to_json(
    const DashboardReport& report) {
  auto ranked = [](const std::vector<std::pair<std::string, uint64_t>>& v) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [value, count] : v)
      arr.push_back({{"value", value}, {"count", count}});
    return arr;
  };
  nlohmann::ordered_json j;
  j["n_documents"] = report.n_documents;
  j["top_usernames"] = ranked(report.top_usernames);
  j["top_passwords"] = ranked(report.top_passwords);
  j["top_tools"] = ranked(report.top_tools);
  nlohmann::ordered_json buckets = nlohmann::ordered_json::array();
  for (const auto& [start_s, count] : report.volume_buckets)
    buckets.push_back({{"bucket_start", format_iso8601_us(start_s * 1000000)},
                       {"count", count}});
  j["volume_buckets"] = std::move(buckets);
  j["inference_latency_ms"] =
      report.latency ? latency_stats_to_json(*report.latency)
                     : nlohmann::ordered_json(nullptr);
  j["server_latency_ms"] =
      report.server_latency ? latency_stats_to_json(*report.server_latency)
                            : nlohmann::ordered_json(nullptr);
  return j;
}

inline void print_dashboard_table(std::ostream& out,
                                  const DashboardReport& report) {
  auto table = [&](const char* title,
                   const std::vector<std::pair<std::string, uint64_t>>& rows) {
    out << title << "\n";
    if (rows.empty()) out << "  (none)\n";
    for (const auto& [value, count] : rows)
      out << "  " << std::left << std::setw(24) << value << ' ' << count
          << "\n";
    out << "\n";
  };
  out << "documents: " << report.n_documents << "\n\n";
  table("top usernames", report.top_usernames);
  table("top passwords", report.top_passwords);
  table("top predicted tools", report.top_tools);
  out << "log volume (bucket start, count)\n";
  for (const auto& [start_s, count] : report.volume_buckets)
    out << "  " << format_iso8601_us(start_s * 1000000) << "  " << count
        << "\n";
  out << "\n";
  auto latency_block = [&](const char* title,
                           const std::optional<LatencyStats>& s) {
    out << title << ": ";
    if (!s) {
      out << "(no samples)\n";
      return;
    }
    out << "count " << s->count << ", mean " << s->mean_ms << " ms, p95 "
        << s->p95_ms << " ms, p99 " << s->p99_ms << " ms, max " << s->max_ms
        << " ms\n";
  };
  latency_block("inference latency (round trip)", report.latency);
  latency_block("inference latency (server side)", report.server_latency);
}

// ---------------------------------------------------------------------------
// Bulk output
// ---------------------------------------------------------------------------

struct BulkOptions {
  std::string index = "cowrie";
};

inline std::string bulk_payload(const std::vector<Document>& documents,
                                const BulkOptions& options) {
  std::string out;
  for (const Document& doc : documents) {
    nlohmann::ordered_json action{
        {"index", {{"_index", options.index}, {"_id", doc.doc_id}}}};
    out += action.dump();
    out += '\n';
    out += document_to_json(doc).dump();
    out += '\n';
  }
  return out;
}

// Appends alternating action/document lines to a bulk NDJSON file.
inline size_t write_bulk(const std::vector<Document>& documents,
                         const std::string& path, BulkOptions options = {}) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot open bulk file " + path);
  out << bulk_payload(documents, options);
  if (!out) throw IoError("write failed for bulk file " + path);
  return documents.size();
}

// Reads a bulk NDJSON file back into documents (ids from action lines).
inline std::vector<Document> read_bulk_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open bulk file " + path);
  std::vector<Document> docs;
  std::string action_line, doc_line;
  size_t lineno = 0;
  while (std::getline(in, action_line)) {
    ++lineno;
    if (action_line.empty()) continue;
    if (!std::getline(in, doc_line))
      throw MalformedJson(path + ": action line without document at line " +
                          std::to_string(lineno));
    ++lineno;
    nlohmann::json action = nlohmann::json::parse(action_line, nullptr, false);
    nlohmann::json body = nlohmann::json::parse(doc_line, nullptr, false);
    if (action.is_discarded() || body.is_discarded() ||
        !action.contains("index"))
      throw MalformedJson(path + ": bad bulk pair ending at line " +
                          std::to_string(lineno));
    std::string id = action["index"].value("_id", std::string{});
    docs.push_back(document_from_json(body, id));
  }
  return docs;
}

}  // namespace cowlog
