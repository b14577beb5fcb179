#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "noisychannel/text.hpp"

namespace noisychannel {

struct Semantics {
  std::string intent;
  std::string slot;

  friend bool operator==(const Semantics&, const Semantics&) = default;
};

// One user turn: what was said, what the recognizer heard, and how sure it was.
struct TranscribedTurn {
  Tokens reference;   // non-empty
  Tokens hypothesis;  // may be empty (recognizer produced nothing)
  double score = 0.0; // in [0, 1]
  std::optional<Semantics> semantics;
  std::optional<bool> out_of_domain;

  bool has_error() const { return reference != hypothesis; }
};

struct Corpus {
  std::string id;
  std::vector<TranscribedTurn> turns;

  std::size_t size() const { return turns.size(); }
  bool empty() const { return turns.empty(); }
};

enum class CorpusFormat { Jsonl, Csv };

// Picks the format from the file extension (".csv" is CSV, anything else JSONL).
CorpusFormat format_for_path(const std::filesystem::path& path);

// Throws ParseError (with line number) on malformed records and
// ValidationError on out-of-range scores or empty references.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus load_corpus(const std::filesystem::path& path);
Corpus read_jsonl(std::istream& in, std::string id = "");
Corpus read_csv(std::istream& in, std::string id = "");

void write_jsonl(std::ostream& out, const Corpus& corpus);
void write_csv(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

// Checks the TranscribedTurn invariants; throws ValidationError.
void validate_turn(const TranscribedTurn& turn);

// Shuffles with `seed` and cuts at round(n * train_fraction) (halves round
// away from zero, so 64,830 * 0.75 gives 48,623 training turns). Each side
// keeps the original corpus order.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_fraction,
                                       std::uint64_t seed);

// Keeps the first turn of each distinct (reference, hypothesis) pair.
Corpus dedup_pairs(const Corpus& corpus);

}  // namespace noisychannel
