#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "cowlog/strutil.hpp"

namespace cowlog {

// Quote-aware shell command lexer plus the rule-based utility extractor
// used both as the labeling oracle and as a runnable extractor backend.
//
// Extraction convention (encoded by the golden corpus):
//   * a command line splits into segments on unquoted ";", "&&", "||",
//     "|" and newlines; single "&" is not a separator
//   * per segment the head is the first token after skipping leading
//     environment assignments (tokens containing "=") and redirections
//     (">out", "2>&1", "> target", ...); if the candidate head is a
//     flag ("-..."), the segment yields nothing from that point
//   * the head's basename is the utility; wrapper heads (sudo, nohup,
//     busybox, time, exec, env) also recurse on the remaining tokens
//   * "$(...)", backticks and quoted payloads ("sh -c '...'") are
//     opaque arguments, never recursed into

enum class SeparatorKind { None, Semicolon, AndAnd, OrOr, Pipe };

struct Segment {
  std::string text;                 // trimmed raw text of the segment
  std::vector<std::string> tokens;  // quotes retained inside tokens
  SeparatorKind separator_before = SeparatorKind::None;
};

struct Segmentation {
  std::vector<Segment> segments;
  bool unterminated_quote = false;  // lenient mode: rest of line was taken as quoted
};

struct TokenList {
  std::vector<std::string> tokens;
  bool unterminated_quote = false;
};

inline bool is_space_char(char c) {
  return c == ' ' || c == '\t' || c == '\r';
}

// Whitespace split outside quotes; backslash escapes are not interpreted.
inline TokenList tokenize(std::string_view text) {
  TokenList out;
  std::string cur;
  char quote = 0;
  bool has_cur = false;
  for (char c : text) {
    if (quote != 0) {
      cur += c;
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      cur += c;
      has_cur = true;
      continue;
    }
    if (is_space_char(c) || c == '\n') {
      if (has_cur) out.tokens.push_back(cur);
      cur.clear();
      has_cur = false;
      continue;
    }
    cur += c;
    has_cur = true;
  }
  if (has_cur) out.tokens.push_back(cur);
  out.unterminated_quote = quote != 0;
  return out;
}

inline Segmentation segment(std::string_view command) {
  Segmentation out;
  std::string cur;
  char quote = 0;
  SeparatorKind pending = SeparatorKind::None;

  auto flush = [&](SeparatorKind next_sep) {
    std::string trimmed = trim(cur);
    cur.clear();
    if (!trimmed.empty()) {
      TokenList toks = tokenize(trimmed);
      out.unterminated_quote |= toks.unterminated_quote;
      if (!toks.tokens.empty()) {
        Segment seg;
        seg.text = std::move(trimmed);
        seg.tokens = std::move(toks.tokens);
        seg.separator_before = pending;
        out.segments.push_back(std::move(seg));
      }
    }
    pending = next_sep;
  };

  size_t i = 0;
  const size_t n = command.size();
  while (i < n) {
    char c = command[i];
    if (quote != 0) {
      cur += c;
      if (c == quote) quote = 0;
      ++i;
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      cur += c;
      ++i;
      continue;
    }
    if (c == ';' || c == '\n') {
      flush(SeparatorKind::Semicolon);
      ++i;
      continue;
    }
    if (c == '&' && i + 1 < n && command[i + 1] == '&') {
      flush(SeparatorKind::AndAnd);
      i += 2;
      continue;
    }
    if (c == '|') {
      if (i + 1 < n && command[i + 1] == '|') {
        flush(SeparatorKind::OrOr);
        i += 2;
      } else {
        flush(SeparatorKind::Pipe);
        ++i;
      }
      continue;
    }
    cur += c;
    ++i;
  }
  if (quote != 0) out.unterminated_quote = true;  // lenient: kept as quoted text
  flush(SeparatorKind::None);
  return out;
}

namespace lexdetail {

inline std::string unquote(std::string_view tok) {
  if (tok.size() >= 2 && (tok.front() == '\'' || tok.front() == '"') &&
      tok.back() == tok.front())
    return std::string(tok.substr(1, tok.size() - 2));
  return std::string(tok);
}

inline std::string basename_of(std::string_view tok) {
  std::string t = unquote(tok);
  size_t slash = t.find_last_of('/');
  if (slash == std::string::npos) return t;
  return t.substr(slash + 1);
}

inline bool is_flag(std::string_view tok) {
  return !tok.empty() && tok.front() == '-';
}

inline bool is_assignment(std::string_view tok) {
  return tok.find('=') != std::string_view::npos;
}

// Matches [0-9]* followed by >, >> or <. Returns how many tokens the
// redirection consumes starting at `tok` (0 = not a redirection).
inline size_t redirection_span(std::string_view tok) {
  size_t p = 0;
  while (p < tok.size() && tok[p] >= '0' && tok[p] <= '9') ++p;
  if (p == tok.size()) return 0;
  if (tok[p] == '<') {
    ++p;
  } else if (tok[p] == '>') {
    ++p;
    if (p < tok.size() && tok[p] == '>') ++p;
  } else {
    return 0;
  }
  if (p == tok.size()) return 2;               // "> target" form
  if (tok[p] == '&') return 1;                 // "2>&1" form, self-contained
  return 1;                                    // ">target" fused form
}

inline bool is_wrapper(std::string_view name) {
  static constexpr std::array<std::string_view, 6> kWrappers = {
      "sudo", "nohup", "busybox", "time", "exec", "env"};
  for (auto w : kWrappers)
    if (name == w) return true;
  return false;
}

}  // namespace lexdetail

// Rule-based extraction of the utility names a command line invokes,
// in segment order. Total on arbitrary text; empty list when nothing
// recognizable is present.
inline std::vector<std::string> extract_utilities(std::string_view command) {
  using namespace lexdetail;
  std::vector<std::string> out;
  Segmentation segs = segment(command);
  for (const Segment& seg : segs.segments) {
    size_t i = 0;
    const auto& toks = seg.tokens;
    while (i < toks.size()) {
      // find the head of the (sub)command starting at i
      bool stopped = false;
      while (i < toks.size()) {
        const std::string& t = toks[i];
        size_t span = redirection_span(t);
        if (span > 0) {
          i += span;
          continue;
        }
        if (is_flag(t)) {
          stopped = true;  // flags never become utilities
          break;
        }
        if (is_assignment(t)) {
          ++i;
          continue;
        }
        break;
      }
      if (stopped || i >= toks.size()) break;
      std::string name = basename_of(toks[i]);
      if (name.empty()) break;
      out.push_back(name);
      if (!is_wrapper(name)) break;
      ++i;  // wrapper: recurse on the remainder of the segment
    }
  }
  return out;
}

}  // namespace cowlog
