#include "noisychannel/alignment.hpp"

#include <algorithm>

#include "noisychannel/errors.hpp"

namespace noisychannel {

namespace {

// Suffix cost table: entry (i, j) is the cost of aligning ref[i..] with
// hyp[j..], stored row-major, (n+1) x (m+1). Costs are lexicographic
// (edits, indels) packed as edits * w + indels with w > n + m, so among
// minimum-edit alignments the one with the most diagonal moves wins. This
// fixes the insertion and deletion counts of the optimum, which makes them
// symmetric under swapping reference and hypothesis.
struct SuffixCosts {
  std::vector<std::size_t> d;
  std::size_t cols = 0;
  std::size_t w = 0;
  std::size_t at(std::size_t i, std::size_t j) const { return d[i * cols + j]; }
};

SuffixCosts suffix_costs(const Tokens& ref, const Tokens& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  SuffixCosts c{std::vector<std::size_t>((n + 1) * (m + 1)), m + 1, n + m + 1};
  const std::size_t indel = c.w + 1;
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return c.d[i * c.cols + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, m) = (n - i) * indel;
  for (std::size_t j = 0; j <= m; ++j) at(n, j) = (m - j) * indel;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      const std::size_t diag = at(i + 1, j + 1) + (ref[i] == hyp[j] ? 0 : c.w);
      at(i, j) = std::min({diag, at(i + 1, j) + indel, at(i, j + 1) + indel});
    }
  }
  return c;
}

}  // namespace

std::vector<EditOp> align(const Tokens& reference, const Tokens& hypothesis) {
  if (reference.empty()) throw DomainError("align: reference is empty");
  const std::size_t n = reference.size(), m = hypothesis.size();
  const auto c = suffix_costs(reference, hypothesis);
  auto at = [&](std::size_t i, std::size_t j) { return c.at(i, j); };
  const std::size_t indel = c.w + 1;

  std::vector<EditOp> ops;
  ops.reserve(n + m);
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m) {
      const bool same = reference[i] == hypothesis[j];
      if (at(i, j) == at(i + 1, j + 1) + (same ? 0 : c.w)) {
        ops.push_back({same ? EditKind::Match : EditKind::Substitute, reference[i], hypothesis[j]});
        ++i;
        ++j;
        continue;
      }
    }
    if (i < n && at(i, j) == at(i + 1, j) + indel) {
      ops.push_back({EditKind::Delete, reference[i], std::nullopt});
      ++i;
    } else {
      ops.push_back({EditKind::Insert, std::nullopt, hypothesis[j]});
      ++j;
    }
  }
  return ops;
}

std::size_t edit_distance(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

WerFeatures wer_features(const std::vector<EditOp>& ops) {
  WerFeatures f;
  for (const auto& op : ops) {
    switch (op.kind) {
      case EditKind::Match: ++f.n_correct; ++f.ref_len; break;
      case EditKind::Substitute: ++f.n_sub; ++f.ref_len; break;
      case EditKind::Delete: ++f.n_del; ++f.ref_len; break;
      case EditKind::Insert: ++f.n_ins; break;
    }
  }
  if (f.ref_len > 0) f.wer = static_cast<double>(f.edits()) / static_cast<double>(f.ref_len);
  return f;
}

Tokens apply_ops(const std::vector<EditOp>& ops) {
  Tokens out;
  for (const auto& op : ops) {
    if (op.kind != EditKind::Delete) out.push_back(*op.hyp_token);
  }
  return out;
}

namespace {

void accumulate(ErrorStats& s, const Tokens& ref, const Tokens& hyp) {
  const auto f = wer_features(ref, hyp);
  s.ref_tokens += f.ref_len;
  s.n_sub += f.n_sub;
  s.n_ins += f.n_ins;
  s.n_del += f.n_del;
}

void finish(ErrorStats& s) {
  const std::size_t edits = s.n_sub + s.n_ins + s.n_del;
  s.corpus_wer = static_cast<double>(edits) / static_cast<double>(s.ref_tokens);
  s.zero_edits = edits == 0;
  if (!s.zero_edits) {
    s.sub_share = static_cast<double>(s.n_sub) / static_cast<double>(edits);
    s.ins_share = static_cast<double>(s.n_ins) / static_cast<double>(edits);
    s.del_share = static_cast<double>(s.n_del) / static_cast<double>(edits);
  }
}

}  // namespace

ErrorStats aggregate_error_stats(const std::vector<TokenPair>& pairs) {
  if (pairs.empty()) throw DomainError("aggregate_error_stats: no pairs");
  ErrorStats s;
  for (const auto& [ref, hyp] : pairs) accumulate(s, ref, hyp);
  finish(s);
  return s;
}

ErrorStats aggregate_error_stats(const Corpus& corpus) {
  if (corpus.empty()) throw DomainError("aggregate_error_stats: empty corpus");
  ErrorStats s;
  for (const auto& t : corpus.turns) accumulate(s, t.reference, t.hypothesis);
  finish(s);
  return s;
}

void to_json(nlohmann::json& j, const ErrorStats& s) {
  j = nlohmann::json{{"corpus_wer", s.corpus_wer}, {"ref_tokens", s.ref_tokens}, {"substitutions", s.n_sub},
                     {"insertions", s.n_ins},      {"deletions", s.n_del},        {"substitution_share", s.sub_share},
                     {"insertion_share", s.ins_share}, {"deletion_share", s.del_share}, {"zero_edits", s.zero_edits}};
}

}  // namespace noisychannel
