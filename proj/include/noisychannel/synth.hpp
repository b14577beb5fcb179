#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisychannel/catalog.hpp"
#include "noisychannel/corpus.hpp"

namespace noisychannel {

// Relative weights of the three error types; normalized before use.
struct ErrorMix {
  double substitution = 0.4832;
  double insertion = 0.1867;
  double deletion = 0.3301;
};

// Synthetic stand-in for a transcribed production corpus.
//
// Noise process, per reference token: substituted with probability
// w_sub * target_wer, otherwise deleted with probability w_del * target_wer;
// after every token an extra word is inserted with probability
// w_ins * target_wer (w_* are the normalized mixture weights). Substitutes
// come from the token's three most similar words in the catalog vocabulary
// plus the filler list (weights 0.6 / 0.3 / 0.1); inserted words are drawn
// uniformly from the filler list.
//
// Score rule: score = clamp(1 - score_slope * WER + N(0, score_noise), 0, 1),
// where WER is the aligned WER of the generated turn.
struct SynthConfig {
  Catalog catalog = default_catalog();
  std::size_t n_turns = 5000;
  double target_wer = 0.20;
  ErrorMix mix;
  double ood_fraction = 0.23;
  double off_grammar_fraction = 0.05;
  double score_slope = 0.8;
  double score_noise = 0.1;
  std::vector<std::string> filler_words = {"the", "a", "uh", "um", "and", "of", "in", "to", "it", "is"};
};

// Throws ConfigError on an empty template set or invalid rates.
Corpus synth_corpus(const SynthConfig& config, std::uint64_t seed);

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

}  // namespace noisychannel
