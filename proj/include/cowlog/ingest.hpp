#pragma once

#include <sys/stat.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cowlog/errors.hpp"

namespace cowlog {

// File tailer with restart-safe offsets. Polling based; delivery is
// at-least-once across crashes (commit after downstream flush), and
// downstream deduplicates by document id.

struct FileIdentity {
  uint64_t dev = 0;
  uint64_t inode = 0;

  bool known() const { return dev != 0 || inode != 0; }
  friend bool operator==(const FileIdentity&, const FileIdentity&) = default;
};

struct TailState {
  std::string path;
  uint64_t offset = 0;
  FileIdentity identity;
};

inline std::optional<FileIdentity> probe_identity(const std::string& path,
                                                  uint64_t* size_out = nullptr) {
  struct ::stat st{};
  if (::stat(path.c_str(), &st) != 0) return std::nullopt;
  if (size_out) *size_out = static_cast<uint64_t>(st.st_size);
  return FileIdentity{static_cast<uint64_t>(st.st_dev),
                      static_cast<uint64_t>(st.st_ino)};
}

// Offsets persisted as one small JSON file: path -> {offset, dev, inode}.
// A corrupt store is a fresh start (with a warning), never a hard stop.
class StateStore {
public:
  explicit StateStore(std::string path) : path_(std::move(path)) { reload(); }

  std::optional<TailState> lookup(const std::string& file_path) const {
    auto it = entries_.find(file_path);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void record(const TailState& state) {
    entries_[state.path] = state;
    persist();
  }

  bool was_corrupt() const { return was_corrupt_; }

private:
  void reload() {
    entries_.clear();
    std::ifstream in(path_);
    if (!in) return;  // nothing persisted yet
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j = nlohmann::json::parse(buf.str(), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("files") ||
        !j["files"].is_object()) {
      std::cerr << "warning: tail state store " << path_
                << " is corrupt, starting fresh\n";
      was_corrupt_ = true;
      return;
    }
    for (auto& [file, entry] : j["files"].items()) {
      if (!entry.is_object()) continue;
      TailState st;
      st.path = file;
      st.offset = entry.value("offset", 0ull);
      st.identity.dev = entry.value("dev", 0ull);
      st.identity.inode = entry.value("inode", 0ull);
      entries_[file] = st;
    }
  }

  void persist() {
    nlohmann::ordered_json j;
    j["version"] = 1;
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& [file, st] : entries_) {
      files[file] = {{"offset", st.offset},
                     {"dev", st.identity.dev},
                     {"inode", st.identity.inode}};
    }
    j["files"] = std::move(files);
    std::string tmp = path_ + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
      if (!out) throw IoError("cannot write state store " + tmp);
      out << j.dump(2) << '\n';
      if (!out) throw IoError("write failed for state store " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path_, ec);
    if (ec) throw IoError("cannot replace state store " + path_);
  }

  std::string path_;
  std::map<std::string, TailState> entries_;
  bool was_corrupt_ = false;
};

// Resumes from the persisted offset when the file on disk is still the
// same file (device+inode); a replaced file starts over at 0.
inline TailState open_tail(const std::string& path, const StateStore& store) {
  TailState st;
  st.path = path;
  uint64_t size = 0;
  std::optional<FileIdentity> ident = probe_identity(path, &size);
  if (ident) st.identity = *ident;

  std::optional<TailState> persisted = store.lookup(path);
  if (persisted && ident && persisted->identity == *ident) {
    st.offset = persisted->offset;
    if (st.offset > size) st.offset = 0;  // truncated while we were away
  }
  return st;
}

// Returns the complete LF-terminated lines that appeared since the last
// poll. A trailing partial line stays unconsumed (the offset only ever
// advances past returned lines). Truncation resets to the top; a changed
// file identity means rotation and also starts over.
inline std::vector<std::string> poll_lines(TailState& state) {
  std::vector<std::string> lines;
  uint64_t size = 0;
  std::optional<FileIdentity> ident = probe_identity(state.path, &size);
  if (!ident) return lines;  // absent: watch mode, keep waiting

  if (state.identity.known() && !(*ident == state.identity)) {
    state.identity = *ident;
    state.offset = 0;
  } else if (!state.identity.known()) {
    state.identity = *ident;
    state.offset = 0;
  }
  if (size < state.offset) state.offset = 0;  // truncation
  if (size == state.offset) return lines;

  std::ifstream in(state.path, std::ios::binary);
  if (!in) throw IoError("cannot open " + state.path);
  in.seekg(static_cast<std::streamoff>(state.offset));
  std::string chunk(size - state.offset, '\0');
  in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  chunk.resize(static_cast<size_t>(in.gcount()));

  size_t consumed = chunk.rfind('\n');
  if (consumed == std::string::npos) return lines;  // only a partial line
  ++consumed;  // include the newline

  size_t begin = 0;
  while (begin < consumed) {
    size_t nl = chunk.find('\n', begin);
    std::string line = chunk.substr(begin, nl - begin);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    begin = nl + 1;
  }
  state.offset += consumed;
  return lines;
}

inline void commit_offset(const TailState& state, StateStore& store) {
  store.record(state);
}

}  // namespace cowlog
