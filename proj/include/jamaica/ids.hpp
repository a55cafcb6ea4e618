#pragma once

#include <string>

namespace jamaica {

// 26-character Crockford base32 identifier: 48-bit unix-millisecond prefix,
// 80 random bits. Lexicographic order follows creation time; ids minted in
// the same millisecond stay ordered via per-process monotonic increments.
std::string new_ulid();

}  // namespace jamaica
