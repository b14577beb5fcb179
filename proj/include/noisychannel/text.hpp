#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace noisychannel {

using Tokens = std::vector<std::string>;

// Lowercases, strips ASCII punctuation (apostrophes inside words are kept)
// and splits on whitespace.
Tokens tokenize(std::string_view text);

// Joins tokens with single spaces. join({}) == "".
std::string join(const Tokens& tokens);

// Splits a space-joined fragment key back into tokens; "" yields {}.
Tokens split_key(std::string_view key);

}  // namespace noisychannel

namespace noisychannel {

// Characters matched by the longest-matching-block decomposition used by
// Python's difflib.SequenceMatcher (no junk heuristic): find the longest common
// block (earliest in `a`, then earliest in `b`), then recurse on both sides.
std::size_t matched_characters(std::string_view a, std::string_view b);

// 2 * matched_characters / (|a| + |b|); 1.0 for two empty strings.
double similarity_ratio(std::string_view a, std::string_view b);

}  // namespace noisychannel
