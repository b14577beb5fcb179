#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "noisychannel/text.hpp"

namespace noisychannel {

// The intent fires when every keyword appears somewhere in the text.
struct IntentPattern {
  std::string intent;
  Tokens keywords;
};

// An utterance with a "{slot}" placeholder. Off-grammar templates are
// phrasings the keyword NLU does not cover; they appear in synthetic corpora
// so reference-text NLU has a nonzero error rate, but the dialog simulator
// never speaks them.
struct UtteranceTemplate {
  std::string intent;
  std::string text;
  bool in_grammar = true;
};

// Domain content shared by the corpus synthesizer, the toy NLU and the
// dialog simulator.
struct Catalog {
  std::vector<std::string> intents;
  std::vector<IntentPattern> patterns;  // checked in order
  std::vector<std::string> slots;       // slot lexicon, entries may be multi-word
  std::vector<UtteranceTemplate> templates;
  std::vector<std::string> ood_utterances;

  Tokens render(const UtteranceTemplate& tmpl, const std::string& slot) const;
  std::vector<const UtteranceTemplate*> templates_for(const std::string& intent, bool in_grammar_only) const;
  // Every token that can appear in a rendered utterance, sorted and unique.
  std::vector<std::string> vocabulary() const;
};

// Movie-domain catalog: 5 intents, 20 titles, 3 in-grammar templates per
// intent plus one off-grammar phrasing, and a dozen out-of-domain requests.
Catalog default_catalog();

void to_json(nlohmann::json& j, const Catalog& c);
void from_json(const nlohmann::json& j, Catalog& c);

inline constexpr const char* kOodIntent = "ood";

}  // namespace noisychannel

namespace noisychannel {

// Intent/slot interpretation of one utterance. Out-of-domain results carry
// intent "ood" and an empty slot.
struct NluResult {
  std::string intent;
  std::string slot;
  bool ood = false;

  friend bool operator==(const NluResult&, const NluResult&) = default;
};

}  // namespace noisychannel
