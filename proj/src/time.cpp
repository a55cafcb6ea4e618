#include "jamaica/time.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "jamaica/errors.hpp"

namespace jamaica {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

int days_in_month(int y, int m) {
  static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2) {
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return leap ? 29 : 28;
  }
  return lengths[m - 1];
}

}  // namespace

std::optional<Timestamp> Timestamp::try_parse(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SS[.fff...](Z|+HH:MM|-HH:MM)
  int year, month, day, hour, minute, second;
  if (s.size() < 20) return std::nullopt;
  if (!parse_fixed_uint(s, 0, 4, year)) return std::nullopt;
  if (s[4] != '-' || !parse_fixed_uint(s, 5, 2, month)) return std::nullopt;
  if (s[7] != '-' || !parse_fixed_uint(s, 8, 2, day)) return std::nullopt;
  if ((s[10] != 'T' && s[10] != 't' && s[10] != ' ')) return std::nullopt;
  if (!parse_fixed_uint(s, 11, 2, hour)) return std::nullopt;
  if (s[13] != ':' || !parse_fixed_uint(s, 14, 2, minute)) return std::nullopt;
  if (s[16] != ':' || !parse_fixed_uint(s, 17, 2, second)) return std::nullopt;
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month) ||
      hour > 23 || minute > 59 || second > 60) {
    return std::nullopt;
  }
  if (second == 60) second = 59;  // fold leap seconds

  std::size_t pos = 19;
  std::int64_t millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    std::int64_t frac = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 3) frac = frac * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0 || digits > 9) return std::nullopt;
    while (digits < 3) {
      frac *= 10;
      ++digits;
    }
    millis = frac;
  }

  std::int64_t offset_min = 0;
  if (pos >= s.size()) return std::nullopt;
  char c = s[pos];
  if (c == 'Z' || c == 'z') {
    ++pos;
  } else if (c == '+' || c == '-') {
    int oh, om;
    if (pos + 6 > s.size()) return std::nullopt;
    if (!parse_fixed_uint(s, pos + 1, 2, oh)) return std::nullopt;
    if (s[pos + 3] != ':' || !parse_fixed_uint(s, pos + 4, 2, om)) return std::nullopt;
    if (oh > 23 || om > 59) return std::nullopt;
    offset_min = oh * 60 + om;
    if (c == '-') offset_min = -offset_min;
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  std::int64_t days = days_from_civil(year, month, day);
  std::int64_t total =
      ((days * 24 + hour) * 60 + minute - offset_min) * 60 + second;
  return Timestamp(total * 1000 + millis);
}

Timestamp Timestamp::parse(std::string_view s) {
  auto t = try_parse(s);
  if (!t) raise(Errc::bad_timestamp, "not an RFC 3339 timestamp: '" + std::string(s) + "'");
  return *t;
}

Timestamp Timestamp::now() {
  using namespace std::chrono;
  return Timestamp(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

std::string Timestamp::to_rfc3339() const {
  std::int64_t ms = ms_;
  std::int64_t sec = ms / 1000;
  std::int64_t frac = ms % 1000;
  if (frac < 0) {
    frac += 1000;
    sec -= 1;
  }
  std::int64_t days = sec / 86400;
  std::int64_t rem = sec % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  const int hh = static_cast<int>(rem / 3600);
  const int mm = static_cast<int>((rem % 3600) / 60);
  const int ss = static_cast<int>(rem % 60);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", y, m, d,
                hh, mm, ss, static_cast<int>(frac));
  return buf;
}

}  // namespace jamaica
