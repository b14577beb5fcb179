#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisychannel/alignment.hpp"
#include "noisychannel/corpus.hpp"
#include "noisychannel/random.hpp"

namespace noisychannel {

// Fragment keys are space-joined token sequences; "" is the empty fragment.
using FragmentKey = std::string;
using ConfusionRow = std::map<FragmentKey, double>;

// N-gram confusion model learned from aligned (reference, hypothesis) pairs.
struct ConfusionModel {
  // reference fragment -> observed hypothesis fragment -> frequency
  std::map<FragmentKey, ConfusionRow> confusion;
  // occurrences of every reference fragment up to max_fragment_len
  std::map<FragmentKey, double> fragment_freq;
  // expected number of times the partitioner picks each fragment when run
  // over the training references; weights for the expected-WER estimate
  std::map<FragmentKey, double> usage;
  double train_wer = 0.0;  // corpus WER of the training pairs
  ErrorStats train_stats;
  std::set<std::string> vocabulary;
  std::size_t max_fragment_len = 3;

  const ConfusionRow* row(const FragmentKey& fragment) const;
  double freq(const FragmentKey& fragment) const;
  bool in_vocabulary(const std::string& word) const { return vocabulary.count(word) > 0; }
};

inline constexpr std::size_t kDefaultMaxFragmentLen = 3;

// Every reference token owns the hypothesis tokens aligned to it plus the
// insertions that follow it (insertions before the first token go to the
// first token). Each reference n-gram, n <= max_fragment_len, is counted
// against the concatenation of the segments its tokens own.
ConfusionModel build_confusion(const Corpus& train, std::size_t max_fragment_len = kDefaultMaxFragmentLen);

// Probability that `word` joins the growing fragment: freq(g + w) / freq(g),
// zero once the fragment reaches max_fragment_len or is unseen.
double join_probability(const ConfusionModel& model, const Tokens& fragment, const std::string& word);

std::vector<Tokens> partition_utterance(const Tokens& utterance, const ConfusionModel& model, Rng& rng);

// Draws a replacement proportionally to the row's frequencies.
Tokens sample_replacement(const ConfusionRow& row, Rng& rng);

// Closest in-vocabulary word by similarity_ratio; ties go to the
// lexicographically smallest word. Throws DomainError on an empty vocabulary.
std::string closest_in_vocabulary(const std::string& word, const ConfusionModel& model);

// Leaves an out-of-vocabulary word unchanged with probability 1 - train_wer,
// otherwise samples from the confusion row of its closest in-vocabulary word.
Tokens map_oov(const std::string& word, const ConfusionModel& model, Rng& rng);

Tokens simulate_hypothesis(const Tokens& reference, const ConfusionModel& model, Rng& rng);

// Simulates every turn of `references` (one stream, in order). Scores and
// annotations are copied from the input turns.
Corpus simulate_corpus(const Corpus& references, const ConfusionModel& model, Rng& rng);

// Model-side WER estimate after multiplying every self-replacement frequency
// by `self_scale`, calibrated so that self_scale = 1 gives train_wer.
double expected_wer(const ConfusionModel& model, double self_scale);

// Rescales self-replacement frequencies by one factor, found by bisection on
// expected_wer, so the expected simulated WER equals target_wer. target 0
// collapses every row to self-only. Throws RangeError (stating the
// achievable range) when the target cannot be reached.
ConfusionModel adjust_self_frequency(const ConfusionModel& model, double target_wer);

void to_json(nlohmann::json& j, const ConfusionModel& m);
void from_json(const nlohmann::json& j, ConfusionModel& m);
void save_confusion(const std::filesystem::path& path, const ConfusionModel& model);
ConfusionModel load_confusion(const std::filesystem::path& path);

}  // namespace noisychannel
