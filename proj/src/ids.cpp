#include "jamaica/ids.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <random>

namespace jamaica {

namespace {

constexpr char kAlphabet[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

struct UlidState {
  std::mutex mu;
  std::mt19937_64 rng{std::random_device{}()};
  std::int64_t last_ms = -1;
  std::uint64_t rand_hi = 0;  // 16 bits used
  std::uint64_t rand_lo = 0;  // 64 bits
};

UlidState& state() {
  static UlidState s;
  return s;
}

}  // namespace

std::string new_ulid() {
  using namespace std::chrono;
  auto& s = state();
  std::lock_guard lock(s.mu);

  const std::int64_t ms =
      duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  if (ms != s.last_ms) {
    s.last_ms = ms;
    s.rand_hi = s.rng() & 0xFFFF;
    s.rand_lo = s.rng();
  } else {
    // same millisecond: increment the 80-bit random part
    if (++s.rand_lo == 0) s.rand_hi = (s.rand_hi + 1) & 0xFFFF;
  }

  std::string out(26, '0');
  std::uint64_t t = static_cast<std::uint64_t>(ms) & 0xFFFFFFFFFFFF;  // 48 bits
  for (int i = 9; i >= 0; --i) {
    out[i] = kAlphabet[t & 0x1F];
    t >>= 5;
  }
  // 80 random bits -> 16 chars, big-endian over (rand_hi:16, rand_lo:64)
  std::uint64_t lo = s.rand_lo;
  std::uint64_t hi = s.rand_hi;
  for (int i = 25; i >= 10; --i) {
    out[i] = kAlphabet[lo & 0x1F];
    lo = (lo >> 5) | ((hi & 0x1F) << 59);
    hi >>= 5;
  }
  return out;
}

}  // namespace jamaica
