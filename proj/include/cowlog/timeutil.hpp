#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "cowlog/errors.hpp"

namespace cowlog {

// Timestamps are microseconds since the Unix epoch, always UTC.
// ISO8601 handling is hand-rolled: libstdc++ 11 has no usable
// std::chrono::parse and the accepted grammar here is small.

namespace timedetail {

// Howard Hinnant's civil date algorithms (public domain arithmetic).
inline int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

inline void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

inline bool is_leap(int64_t y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline unsigned days_in_month(int64_t y, unsigned m) {
  static constexpr std::array<unsigned, 12> k = {31, 28, 31, 30, 31, 30,
                                                 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return k[m - 1];
}

inline bool take_digits(std::string_view s, size_t& pos, size_t n, int64_t& out) {
  if (pos + n > s.size()) return false;
  int64_t v = 0;
  for (size_t i = 0; i < n; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  pos += n;
  out = v;
  return true;
}

}  // namespace timedetail

// Accepts YYYY-MM-DDTHH:MM:SS with an optional fractional part (1..9
// digits, truncated to microseconds) and an optional offset: "Z",
// "+HH:MM", "-HH:MM", "+HHMM" or "+HH". No offset means UTC.
inline int64_t parse_iso8601_us(std::string_view s) {
  using namespace timedetail;
  auto fail = [&]() -> int64_t {
    throw BadTimestamp("bad ISO8601 timestamp: '" + std::string(s) + "'");
  };

  size_t pos = 0;
  int64_t year, month, day, hour, minute, second;
  if (!take_digits(s, pos, 4, year)) return fail();
  if (pos >= s.size() || s[pos] != '-') return fail();
  ++pos;
  if (!take_digits(s, pos, 2, month)) return fail();
  if (pos >= s.size() || s[pos] != '-') return fail();
  ++pos;
  if (!take_digits(s, pos, 2, day)) return fail();
  if (pos >= s.size() || (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' '))
    return fail();
  ++pos;
  if (!take_digits(s, pos, 2, hour)) return fail();
  if (pos >= s.size() || s[pos] != ':') return fail();
  ++pos;
  if (!take_digits(s, pos, 2, minute)) return fail();
  if (pos >= s.size() || s[pos] != ':') return fail();
  ++pos;
  if (!take_digits(s, pos, 2, second)) return fail();

  if (month < 1 || month > 12) return fail();
  if (day < 1 || day > days_in_month(year, static_cast<unsigned>(month)))
    return fail();
  if (hour > 23 || minute > 59 || second > 59) return fail();

  int64_t micros = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    size_t start = pos;
    int64_t scale = 100000;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (pos - start < 6) {
        micros += (s[pos] - '0') * scale;
        scale /= 10;
      }
      ++pos;
    }
    if (pos == start) return fail();  // dot with no digits
  }

  int64_t offset_s = 0;
  if (pos < s.size()) {
    char c = s[pos];
    if (c == 'Z' || c == 'z') {
      ++pos;
    } else if (c == '+' || c == '-') {
      int sign = (c == '+') ? 1 : -1;
      ++pos;
      int64_t oh = 0, om = 0;
      if (!take_digits(s, pos, 2, oh)) return fail();
      if (pos < s.size() && s[pos] == ':') {
        ++pos;
        if (!take_digits(s, pos, 2, om)) return fail();
      } else if (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
        if (!take_digits(s, pos, 2, om)) return fail();
      }
      if (oh > 14 || om > 59) return fail();
      offset_s = sign * (oh * 3600 + om * 60);
    } else {
      return fail();
    }
  }
  if (pos != s.size()) return fail();

  int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                 static_cast<unsigned>(day));
  int64_t secs =
      days * 86400 + hour * 3600 + minute * 60 + second - offset_s;
  return secs * 1000000 + micros;
}

// Canonical form: 6-digit fractional seconds, "Z" suffix.
inline std::string format_iso8601_us(int64_t us) {
  using namespace timedetail;
  int64_t secs = us / 1000000;
  int64_t frac = us % 1000000;
  if (frac < 0) {
    frac += 1000000;
    secs -= 1;
  }
  int64_t days = secs / 86400;
  int64_t sod = secs % 86400;
  if (sod < 0) {
    sod += 86400;
    days -= 1;
  }
  int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld.%06lldZ",
                static_cast<long long>(y), m, d,
                static_cast<long long>(sod / 3600),
                static_cast<long long>((sod % 3600) / 60),
                static_cast<long long>(sod % 60), static_cast<long long>(frac));
  return std::string(buf);
}

}  // namespace cowlog
