#include "noisychannel/text.hpp"

#include <algorithm>
#include <cctype>

namespace noisychannel {

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string current;
  auto flush = [&] {
    // Apostrophes survive only inside a word ("what's"), not at its edges.
    while (!current.empty() && current.back() == '\'') current.pop_back();
    std::size_t lead = 0;
    while (lead < current.size() && current[lead] == '\'') ++lead;
    if (lead < current.size()) out.push_back(current.substr(lead));
    current.clear();
  };
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (c == '\'') {
      current.push_back('\'');
    } else if (std::ispunct(c)) {
      continue;
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

std::string join(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Tokens split_key(std::string_view key) {
  Tokens out;
  std::size_t start = 0;
  while (start < key.size()) {
    auto end = key.find(' ', start);
    if (end == std::string_view::npos) end = key.size();
    if (end > start) out.emplace_back(key.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace noisychannel

namespace noisychannel {

namespace {

struct Block {
  std::size_t i, j, size;
};

Block longest_block(std::string_view a, std::size_t alo, std::size_t ahi, std::string_view b, std::size_t blo,
                    std::size_t bhi) {
  Block best{alo, blo, 0};
  // run[j] = length of the common suffix ending at a[i-1], b[j-1].
  std::vector<std::size_t> run(bhi - blo + 1, 0), next(bhi - blo + 1, 0);
  for (std::size_t i = alo; i < ahi; ++i) {
    for (std::size_t j = blo; j < bhi; ++j) {
      const std::size_t k = j - blo + 1;
      next[k] = a[i] == b[j] ? run[k - 1] + 1 : 0;
      // Strictly longer only: keeps the earliest start in a, then in b.
      if (next[k] > best.size) best = {i + 1 - next[k], j + 1 - next[k], next[k]};
    }
    std::swap(run, next);
    std::fill(next.begin(), next.end(), 0);
  }
  return best;
}

std::size_t matched_in(std::string_view a, std::size_t alo, std::size_t ahi, std::string_view b, std::size_t blo,
                       std::size_t bhi) {
  if (alo >= ahi || blo >= bhi) return 0;
  const Block m = longest_block(a, alo, ahi, b, blo, bhi);
  if (m.size == 0) return 0;
  return m.size + matched_in(a, alo, m.i, b, blo, m.j) + matched_in(a, m.i + m.size, ahi, b, m.j + m.size, bhi);
}

}  // namespace

std::size_t matched_characters(std::string_view a, std::string_view b) {
  return matched_in(a, 0, a.size(), b, 0, b.size());
}

double similarity_ratio(std::string_view a, std::string_view b) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(matched_characters(a, b)) / static_cast<double>(total);
}

}  // namespace noisychannel
