#include "noisychannel/confusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "noisychannel/errors.hpp"

namespace noisychannel {

namespace {

constexpr const char* kFormat = "noisychannel.confusion";
constexpr int kVersion = 1;

FragmentKey key_of(const Tokens& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::vector<Tokens> owned_segments(const Tokens& ref, const std::vector<EditOp>& ops) {
  std::vector<Tokens> seg(ref.size());
  Tokens leading;
  std::ptrdiff_t idx = -1;
  for (const auto& op : ops) {
    switch (op.kind) {
      case EditKind::Match:
      case EditKind::Substitute:
        ++idx;
        seg[idx].push_back(*op.hyp_token);
        break;
      case EditKind::Delete:
        ++idx;
        break;
      case EditKind::Insert:
        (idx < 0 ? leading : seg[idx]).push_back(*op.hyp_token);
        break;
    }
  }
  seg[0].insert(seg[0].begin(), leading.begin(), leading.end());
  return seg;
}

// Adds the expected fragment usage of one utterance under the partition
// process. start[i] is the probability that a fragment begins at token i.
void accumulate_usage(const Tokens& utt, const ConfusionModel& model, std::map<FragmentKey, double>& usage) {
  const std::size_t n = utt.size();
  std::vector<double> start(n + 1, 0.0);
  start[0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (start[i] == 0.0) continue;
    double reach = start[i];  // probability the fragment from i extends to j
    Tokens fragment{utt[i]};
    for (std::size_t j = i + 1; j <= n; ++j) {
      const double join = j < n ? join_probability(model, fragment, utt[j]) : 0.0;
      const double stop = reach * (1.0 - join);
      if (stop > 0.0) {
        usage[key_of(utt, i, j)] += stop;
        start[j] += stop;
      }
      reach *= join;
      if (reach == 0.0) break;
      fragment.push_back(utt[j]);
    }
  }
}

// Error mass of one row at a given self scale: (non-self edit cost, denominator).
struct RowCost {
  double self = 0.0;
  double other = 0.0;
  double other_edits = 0.0;  // sum of count * edit_distance over non-self entries
};

std::vector<std::pair<double, RowCost>> weighted_rows(const ConfusionModel& model) {
  std::vector<std::pair<double, RowCost>> rows;
  for (const auto& [frag, weight] : model.usage) {
    const auto* r = model.row(frag);
    if (!r || weight <= 0.0) continue;
    const auto frag_tokens = split_key(frag);
    RowCost c;
    for (const auto& [repl, count] : *r) {
      if (repl == frag) {
        c.self += count;
      } else {
        c.other += count;
        c.other_edits += count * static_cast<double>(edit_distance(frag_tokens, split_key(repl)));
      }
    }
    rows.emplace_back(weight, c);
  }
  return rows;
}

// Expected edits per reference token; self_scale may be 0 or +inf.
double raw_expected_edits(const std::vector<std::pair<double, RowCost>>& rows, double self_scale) {
  double edits = 0.0;
  for (const auto& [w, c] : rows) {
    if (c.other == 0.0) continue;
    double denom;
    if (std::isinf(self_scale)) {
      if (c.self > 0.0) continue;
      denom = c.other;
    } else {
      denom = self_scale * c.self + c.other;
    }
    edits += w * c.other_edits / denom;
  }
  return edits;
}

}  // namespace

const ConfusionRow* ConfusionModel::row(const FragmentKey& fragment) const {
  auto it = confusion.find(fragment);
  return it == confusion.end() ? nullptr : &it->second;
}

double ConfusionModel::freq(const FragmentKey& fragment) const {
  auto it = fragment_freq.find(fragment);
  return it == fragment_freq.end() ? 0.0 : it->second;
}

ConfusionModel build_confusion(const Corpus& train, std::size_t max_fragment_len) {
  if (train.empty()) throw DomainError("build_confusion: training corpus is empty");
  if (max_fragment_len == 0) throw DomainError("build_confusion: max_fragment_len must be positive");
  ConfusionModel model;
  model.max_fragment_len = max_fragment_len;

  std::vector<TokenPair> pairs;
  pairs.reserve(train.size());
  for (const auto& turn : train.turns) {
    const auto& ref = turn.reference;
    const auto seg = owned_segments(ref, align(ref, turn.hypothesis));
    for (std::size_t i = 0; i < ref.size(); ++i) {
      model.vocabulary.insert(ref[i]);
      Tokens replacement;
      for (std::size_t len = 1; len <= max_fragment_len && i + len <= ref.size(); ++len) {
        const auto& owned = seg[i + len - 1];
        replacement.insert(replacement.end(), owned.begin(), owned.end());
        const auto frag = key_of(ref, i, i + len);
        model.confusion[frag][join(replacement)] += 1.0;
        model.fragment_freq[frag] += 1.0;
      }
    }
    pairs.emplace_back(ref, turn.hypothesis);
  }
  model.train_stats = aggregate_error_stats(pairs);
  model.train_wer = model.train_stats.corpus_wer;
  for (const auto& turn : train.turns) accumulate_usage(turn.reference, model, model.usage);
  return model;
}

double join_probability(const ConfusionModel& model, const Tokens& fragment, const std::string& word) {
  if (fragment.size() >= model.max_fragment_len) return 0.0;
  const double base = model.freq(join(fragment));
  if (base <= 0.0) return 0.0;
  Tokens extended = fragment;
  extended.push_back(word);
  return std::min(1.0, model.freq(join(extended)) / base);
}

std::vector<Tokens> partition_utterance(const Tokens& utterance, const ConfusionModel& model, Rng& rng) {
  if (utterance.empty()) throw DomainError("partition_utterance: utterance is empty");
  std::vector<Tokens> fragments{{utterance.front()}};
  for (std::size_t k = 1; k < utterance.size(); ++k) {
    const double p = join_probability(model, fragments.back(), utterance[k]);
    bool joins = p >= 1.0;
    if (p > 0.0 && p < 1.0) joins = bernoulli(rng, p);
    if (joins) fragments.back().push_back(utterance[k]);
    else fragments.push_back({utterance[k]});
  }
  return fragments;
}

Tokens sample_replacement(const ConfusionRow& row, Rng& rng) {
  double total = 0.0;
  for (const auto& [repl, count] : row) total += count;
  if (!(total > 0.0)) throw DomainError("sample_replacement: row has no mass");
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  const FragmentKey* chosen = nullptr;
  for (const auto& [repl, count] : row) {
    if (count <= 0.0) continue;
    chosen = &repl;
    acc += count;
    if (target < acc) break;
  }
  return split_key(*chosen);
}

std::string closest_in_vocabulary(const std::string& word, const ConfusionModel& model) {
  if (model.vocabulary.empty()) throw DomainError("map_oov: model vocabulary is empty");
  const std::string* best = nullptr;
  double best_ratio = -1.0;
  for (const auto& candidate : model.vocabulary) {  // sorted, so ties keep the smallest
    const double r = similarity_ratio(word, candidate);
    if (r > best_ratio) {
      best_ratio = r;
      best = &candidate;
    }
  }
  return *best;
}

Tokens map_oov(const std::string& word, const ConfusionModel& model, Rng& rng) {
  const auto closest = closest_in_vocabulary(word, model);
  if (!bernoulli(rng, model.train_wer)) return {word};
  const auto* r = model.row(closest);
  if (!r) return {word};
  return sample_replacement(*r, rng);
}

Tokens simulate_hypothesis(const Tokens& reference, const ConfusionModel& model, Rng& rng) {
  Tokens out;
  for (const auto& fragment : partition_utterance(reference, model, rng)) {
    Tokens replacement;
    if (fragment.size() == 1 && !model.in_vocabulary(fragment.front())) {
      replacement = map_oov(fragment.front(), model, rng);
    } else if (const auto* r = model.row(join(fragment))) {
      replacement = sample_replacement(*r, rng);
    } else {
      replacement = fragment;
    }
    out.insert(out.end(), replacement.begin(), replacement.end());
  }
  return out;
}

Corpus simulate_corpus(const Corpus& references, const ConfusionModel& model, Rng& rng) {
  Corpus out{references.id + ".simulated", references.turns};
  for (auto& turn : out.turns) turn.hypothesis = simulate_hypothesis(turn.reference, model, rng);
  return out;
}

double expected_wer(const ConfusionModel& model, double self_scale) {
  const auto rows = weighted_rows(model);
  const double at_one = raw_expected_edits(rows, 1.0);
  if (at_one <= 0.0) return 0.0;
  return model.train_wer * raw_expected_edits(rows, self_scale) / at_one;
}

ConfusionModel adjust_self_frequency(const ConfusionModel& model, double target_wer) {
  if (!(target_wer >= 0.0)) throw DomainError("adjust_self_frequency: target_wer must be >= 0");
  ConfusionModel out = model;
  if (target_wer == 0.0) {
    for (auto& [frag, r] : out.confusion) {
      double total = 0.0;
      for (const auto& [repl, count] : r) total += count;
      r = ConfusionRow{{frag, total}};
    }
    return out;
  }
  const auto rows = weighted_rows(model);
  const double at_one = raw_expected_edits(rows, 1.0);
  auto predicted = [&](double scale) {
    return at_one > 0.0 ? model.train_wer * raw_expected_edits(rows, scale) / at_one : 0.0;
  };
  const double max_wer = predicted(0.0);
  const double min_wer = predicted(std::numeric_limits<double>::infinity());
  if (target_wer > max_wer || target_wer < min_wer || at_one <= 0.0) {
    std::ostringstream os;
    os << "adjust_self_frequency: target WER " << target_wer << " unreachable; achievable range is (" << min_wer
       << ", " << max_wer << "]";
    throw RangeError(os.str());
  }
  // predicted() is decreasing in the scale; bisect on log(scale).
  double lo = -60.0, hi = 60.0;
  double scale = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    scale = std::exp(mid);
    const double diff = predicted(scale) - target_wer;
    if (diff == 0.0) break;
    (diff > 0.0 ? lo : hi) = mid;
    if (hi - lo < 1e-13) break;
  }
  if (scale == 1.0) return out;
  for (auto& [frag, r] : out.confusion) {
    if (auto it = r.find(frag); it != r.end()) it->second *= scale;
  }
  return out;
}

void to_json(nlohmann::json& j, const ConfusionModel& m) {
  j = nlohmann::json::object();
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["max_fragment_len"] = m.max_fragment_len;
  j["train_wer"] = m.train_wer;
  j["train_stats"] = m.train_stats;
  j["vocabulary"] = m.vocabulary;
  j["fragment_freq"] = m.fragment_freq;
  j["usage"] = m.usage;
  j["confusion"] = m.confusion;
}

void from_json(const nlohmann::json& j, ConfusionModel& m) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ConfigError("not a confusion model file");
    if (j.at("version").get<int>() != kVersion) throw ConfigError("unsupported confusion model version");
    m = ConfusionModel{};
    m.max_fragment_len = j.at("max_fragment_len").get<std::size_t>();
    m.train_wer = j.at("train_wer").get<double>();
    const auto& s = j.at("train_stats");
    m.train_stats.corpus_wer = s.at("corpus_wer").get<double>();
    m.train_stats.ref_tokens = s.at("ref_tokens").get<std::size_t>();
    m.train_stats.n_sub = s.at("substitutions").get<std::size_t>();
    m.train_stats.n_ins = s.at("insertions").get<std::size_t>();
    m.train_stats.n_del = s.at("deletions").get<std::size_t>();
    m.train_stats.sub_share = s.at("substitution_share").get<double>();
    m.train_stats.ins_share = s.at("insertion_share").get<double>();
    m.train_stats.del_share = s.at("deletion_share").get<double>();
    m.train_stats.zero_edits = s.at("zero_edits").get<bool>();
    m.vocabulary = j.at("vocabulary").get<std::set<std::string>>();
    m.fragment_freq = j.at("fragment_freq").get<std::map<FragmentKey, double>>();
    m.usage = j.at("usage").get<std::map<FragmentKey, double>>();
    m.confusion = j.at("confusion").get<std::map<FragmentKey, ConfusionRow>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("confusion model: ") + e.what());
  }
}

void save_confusion(const std::filesystem::path& path, const ConfusionModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << nlohmann::json(model).dump(1) << '\n';
}

ConfusionModel load_confusion(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j.get<ConfusionModel>();
}

}  // namespace noisychannel
