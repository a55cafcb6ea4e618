#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace jamaica {

/// UTC instant with millisecond precision. The canonical text form is
/// RFC 3339 with exactly three fractional digits: 2016-01-01T00:00:00.000Z.
class Timestamp {
 public:
  Timestamp() = default;
  explicit Timestamp(std::int64_t unix_ms) : ms_(unix_ms) {}

  // Accepts 'Z' or a numeric offset, and 0..9 fractional digits
  // (truncated to milliseconds). Throws Errc::bad_timestamp.
  static Timestamp parse(std::string_view rfc3339);
  static std::optional<Timestamp> try_parse(std::string_view rfc3339);
  static Timestamp now();

  std::string to_rfc3339() const;
  std::int64_t unix_ms() const { return ms_; }

  auto operator<=>(const Timestamp&) const = default;

 private:
  std::int64_t ms_ = 0;
};

}  // namespace jamaica
