#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "noisychannel/corpus.hpp"
#include "noisychannel/text.hpp"

namespace noisychannel {

enum class EditKind { Match, Substitute, Insert, Delete };

// Match/Substitute carry both tokens, Insert only the hypothesis token,
// Delete only the reference token.
struct EditOp {
  EditKind kind;
  std::optional<std::string> ref_token;
  std::optional<std::string> hyp_token;

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct WerFeatures {
  double wer = 0.0;
  std::size_t ref_len = 0;
  std::size_t n_correct = 0;
  std::size_t n_sub = 0;
  std::size_t n_ins = 0;
  std::size_t n_del = 0;

  std::size_t edits() const { return n_sub + n_ins + n_del; }
};

// Minimum-cost Levenshtein alignment with unit costs. Among equal-cost
// alignments those with the fewest insertions plus deletions win, so a
// substitution always beats a delete+insert pair; remaining ties are broken
// by a forward traceback preferring diagonal, then deletion, then insertion.
// Throws DomainError if the reference is empty.
std::vector<EditOp> align(const Tokens& reference, const Tokens& hypothesis);

// Unit-cost Levenshtein distance, no traceback.
std::size_t edit_distance(const Tokens& a, const Tokens& b);

WerFeatures wer_features(const std::vector<EditOp>& ops);

inline WerFeatures wer_features(const Tokens& reference, const Tokens& hypothesis) {
  return wer_features(align(reference, hypothesis));
}

// Replays the ops and returns the hypothesis side.
Tokens apply_ops(const std::vector<EditOp>& ops);

struct ErrorStats {
  double corpus_wer = 0.0;
  std::size_t ref_tokens = 0;
  std::size_t n_sub = 0;
  std::size_t n_ins = 0;
  std::size_t n_del = 0;
  // Each type as a fraction of all edits; all zero when there are no edits.
  double sub_share = 0.0;
  double ins_share = 0.0;
  double del_share = 0.0;
  bool zero_edits = true;
};

using TokenPair = std::pair<Tokens, Tokens>;

// Corpus WER = total edits / total reference tokens. Throws DomainError on an
// empty list.
ErrorStats aggregate_error_stats(const std::vector<TokenPair>& pairs);
ErrorStats aggregate_error_stats(const Corpus& corpus);

void to_json(nlohmann::json& j, const ErrorStats& s);

}  // namespace noisychannel
