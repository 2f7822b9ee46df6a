#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cowlog/errors.hpp"
#include "cowlog/strutil.hpp"
#include "cowlog/timeutil.hpp"

namespace cowlog {

// One structured JSON log line produced by a Cowrie honeypot. Immutable
// after construction by convention; nothing here mutates shared state.
enum class EventKind {
  SessionConnect,
  LoginSuccess,
  LoginFailed,
  CommandInput,
  CommandFailed,
  SessionClosed,
  Other,
};

inline EventKind event_kind_of(std::string_view eventid) {
  if (eventid == "cowrie.session.connect") return EventKind::SessionConnect;
  if (eventid == "cowrie.login.success") return EventKind::LoginSuccess;
  if (eventid == "cowrie.login.failed") return EventKind::LoginFailed;
  if (eventid == "cowrie.command.input") return EventKind::CommandInput;
  if (eventid == "cowrie.command.failed") return EventKind::CommandFailed;
  if (eventid == "cowrie.session.closed") return EventKind::SessionClosed;
  return EventKind::Other;
}

struct CowrieEvent {
  std::string eventid;        // raw discriminator, preserved even when unknown
  int64_t timestamp_us = 0;   // UTC microseconds since epoch
  std::string session;
  std::string src_ip;
  std::string sensor;
  std::string message;
  std::optional<std::string> input;
  std::optional<std::string> username;
  std::optional<std::string> password;
  std::map<std::string, nlohmann::json> extra;  // unmodeled fields, verbatim

  EventKind kind() const { return event_kind_of(eventid); }

  bool is_command_event() const {
    return eventid.rfind("cowrie.command.", 0) == 0;
  }
  bool is_login_event() const {
    return eventid.rfind("cowrie.login.", 0) == 0;
  }

  friend bool operator==(const CowrieEvent& a, const CowrieEvent& b) {
    return a.eventid == b.eventid && a.timestamp_us == b.timestamp_us &&
           a.session == b.session && a.src_ip == b.src_ip &&
           a.sensor == b.sensor && a.message == b.message &&
           a.input == b.input && a.username == b.username &&
           a.password == b.password && a.extra == b.extra;
  }
};

// Parses one JSON log line. Unknown fields are kept in `extra`; only
// eventid and timestamp are required.
inline CowrieEvent parse_event(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded())
    throw MalformedJson("line is not valid JSON");
  if (!j.is_object())
    throw MalformedJson("line is not a JSON object");

  CowrieEvent ev;
  if (!j.contains("eventid") || !j["eventid"].is_string() ||
      j["eventid"].get_ref<const std::string&>().empty())
    throw MissingField("eventid");
  if (!j.contains("timestamp") || !j["timestamp"].is_string())
    throw MissingField("timestamp");

  ev.eventid = j["eventid"].get<std::string>();
  ev.timestamp_us = parse_iso8601_us(j["timestamp"].get<std::string>());

  auto take_string = [&](const char* key, std::string& dst) {
    auto it = j.find(key);
    if (it != j.end() && it->is_string()) {
      dst = it->get<std::string>();
      j.erase(it);
    }
  };
  auto take_optional = [&](const char* key, std::optional<std::string>& dst) {
    auto it = j.find(key);
    if (it != j.end() && it->is_string()) {
      dst = it->get<std::string>();
      j.erase(it);
    }
  };

  j.erase("eventid");
  j.erase("timestamp");
  take_string("session", ev.session);
  take_string("src_ip", ev.src_ip);
  take_string("sensor", ev.sensor);
  take_string("message", ev.message);
  take_optional("input", ev.input);
  take_optional("username", ev.username);
  take_optional("password", ev.password);

  for (auto& [key, value] : j.items()) ev.extra.emplace(key, std::move(value));
  return ev;
}

// Recovers the attacker-typed command from a command event: the `input`
// field when present, otherwise the message minus its "CMD: " prefix.
// That prefix is the only recovery rule applied to messages.
inline std::string extract_command(const CowrieEvent& ev) {
  if (!ev.is_command_event())
    throw NotCommandEvent("eventid '" + ev.eventid + "' is not a command event");
  if (ev.input) {
    std::string cmd = trim(*ev.input);
    if (cmd.empty()) throw EmptyCommand("input field is blank");
    return cmd;
  }
  static constexpr std::string_view kPrefix = "CMD: ";
  if (ev.message.rfind(kPrefix, 0) == 0) {
    std::string cmd = trim(ev.message.substr(kPrefix.size()));
    if (cmd.empty()) throw EmptyCommand("message carries no command text");
    return cmd;
  }
  throw EmptyCommand("no input field and message lacks the CMD prefix");
}

// Single-line JSON, fixed key order, extra fields appended (sorted by
// key). parse_event(serialize_event(e)) == e.
inline std::string serialize_event(const CowrieEvent& ev) {
  nlohmann::ordered_json j;
  j["eventid"] = ev.eventid;
  j["timestamp"] = format_iso8601_us(ev.timestamp_us);
  j["session"] = ev.session;
  j["src_ip"] = ev.src_ip;
  j["sensor"] = ev.sensor;
  j["message"] = ev.message;
  if (ev.input) j["input"] = *ev.input;
  if (ev.username) j["username"] = *ev.username;
  if (ev.password) j["password"] = *ev.password;
  for (const auto& [key, value] : ev.extra) j[key] = value;
  return j.dump();
}

}  // namespace cowlog
