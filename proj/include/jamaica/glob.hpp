#pragma once

#include <string_view>

namespace jamaica {

// Matches '*' (any run of characters, including empty) against the whole
// text; every other pattern character is literal.
bool glob_match(std::string_view pattern, std::string_view text);

}  // namespace jamaica
