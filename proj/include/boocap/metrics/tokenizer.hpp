#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace boocap::metrics {

/// Lowercased tokens with punctuation split off; a terminal "." stays a token.
using TokenSeq = std::vector<std::string>;

/// Lowercases (Latin, Greek and Cyrillic case pairs), splits on Unicode
/// whitespace and peels leading/trailing punctuation into single-character
/// tokens. Inner punctuation ("it's") is kept. Invalid UTF-8 bytes become U+FFFD.
TokenSeq tokenize(std::string_view caption);

std::string join_tokens(const TokenSeq& tokens);

}  // namespace boocap::metrics
