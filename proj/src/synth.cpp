#include "noisychannel/synth.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "noisychannel/alignment.hpp"
#include "noisychannel/errors.hpp"
#include "noisychannel/random.hpp"

namespace noisychannel {

namespace {

using Confusables = std::map<std::string, std::vector<std::string>>;

Confusables build_confusables(const std::vector<std::string>& vocab, const std::vector<std::string>& fillers) {
  std::set<std::string> pool(vocab.begin(), vocab.end());
  pool.insert(fillers.begin(), fillers.end());
  Confusables out;
  for (const auto& word : pool) {
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& other : pool) {
      if (other != word) ranked.emplace_back(-similarity_ratio(word, other), other);
    }
    std::sort(ranked.begin(), ranked.end());
    auto& subs = out[word];
    for (std::size_t k = 0; k < std::min<std::size_t>(3, ranked.size()); ++k) subs.push_back(ranked[k].second);
  }
  return out;
}

Tokens inject_noise(const Tokens& ref, double p_sub, double p_del, double p_ins, const Confusables& confusables,
                    const std::vector<std::string>& fillers, Rng& rng) {
  static constexpr double kSubWeights[] = {0.6, 0.3, 0.1};
  Tokens hyp;
  for (const auto& word : ref) {
    const double u = uniform01(rng);
    if (u < p_sub) {
      const auto& subs = confusables.at(word);
      std::discrete_distribution<std::size_t> pick(std::begin(kSubWeights), std::begin(kSubWeights) + subs.size());
      hyp.push_back(subs[pick(rng)]);
    } else if (u >= p_sub + p_del) {
      hyp.push_back(word);
    }
    if (bernoulli(rng, p_ins)) {
      std::uniform_int_distribution<std::size_t> pick(0, fillers.size() - 1);
      hyp.push_back(fillers[pick(rng)]);
    }
  }
  return hyp;
}

}  // namespace

Corpus synth_corpus(const SynthConfig& config, std::uint64_t seed) {
  const auto& cat = config.catalog;
  if (cat.templates.empty()) throw ConfigError("synth_corpus: template set is empty");
  if (cat.slots.empty()) throw ConfigError("synth_corpus: slot lexicon is empty");
  if (config.target_wer < 0.0) throw ConfigError("synth_corpus: target_wer must be >= 0");
  if (config.ood_fraction < 0.0 || config.ood_fraction > 1.0) throw ConfigError("synth_corpus: ood_fraction outside [0,1]");
  if (config.ood_fraction > 0.0 && cat.ood_utterances.empty()) throw ConfigError("synth_corpus: no out-of-domain utterances");
  if (config.filler_words.empty()) throw ConfigError("synth_corpus: filler word list is empty");
  const double mix_total = config.mix.substitution + config.mix.insertion + config.mix.deletion;
  if (!(mix_total > 0.0) || config.mix.substitution < 0 || config.mix.insertion < 0 || config.mix.deletion < 0) {
    throw ConfigError("synth_corpus: error mixture weights must be nonnegative with a positive sum");
  }
  const double p_sub = config.target_wer * config.mix.substitution / mix_total;
  const double p_del = config.target_wer * config.mix.deletion / mix_total;
  const double p_ins = config.target_wer * config.mix.insertion / mix_total;
  if (p_sub + p_del > 1.0) throw ConfigError("synth_corpus: target_wer too high for the error mixture");

  std::vector<std::string> in_domain_intents;
  for (const auto& intent : cat.intents) {
    if (!cat.templates_for(intent, false).empty()) in_domain_intents.push_back(intent);
  }
  if (in_domain_intents.empty()) throw ConfigError("synth_corpus: no intent has a template");

  const auto confusables = build_confusables(cat.vocabulary(), config.filler_words);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, config.score_noise);

  Corpus corpus{"synthetic", {}};
  corpus.turns.reserve(config.n_turns);
  for (std::size_t t = 0; t < config.n_turns; ++t) {
    TranscribedTurn turn;
    if (bernoulli(rng, config.ood_fraction)) {
      std::uniform_int_distribution<std::size_t> pick(0, cat.ood_utterances.size() - 1);
      turn.reference = tokenize(cat.ood_utterances[pick(rng)]);
      turn.semantics = Semantics{kOodIntent, ""};
      turn.out_of_domain = true;
    } else {
      std::uniform_int_distribution<std::size_t> pick_intent(0, in_domain_intents.size() - 1);
      std::uniform_int_distribution<std::size_t> pick_slot(0, cat.slots.size() - 1);
      const auto& intent = in_domain_intents[pick_intent(rng)];
      const auto& slot = cat.slots[pick_slot(rng)];
      auto in_grammar = cat.templates_for(intent, true);
      auto all = cat.templates_for(intent, false);
      std::vector<const UtteranceTemplate*> off;
      for (auto* t : all) if (!t->in_grammar) off.push_back(t);
      const bool use_off = !off.empty() && (in_grammar.empty() || bernoulli(rng, config.off_grammar_fraction));
      const auto& choices = use_off ? off : in_grammar;
      std::uniform_int_distribution<std::size_t> pick_tmpl(0, choices.size() - 1);
      turn.reference = cat.render(*choices[pick_tmpl(rng)], slot);
      turn.semantics = Semantics{intent, slot};
      turn.out_of_domain = false;
    }
    turn.hypothesis = inject_noise(turn.reference, p_sub, p_del, p_ins, confusables, config.filler_words, rng);
    const double wer = wer_features(turn.reference, turn.hypothesis).wer;
    turn.score = std::clamp(1.0 - config.score_slope * wer + noise(rng), 0.0, 1.0);
    corpus.turns.push_back(std::move(turn));
  }
  return corpus;
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"catalog", c.catalog},
                     {"n_turns", c.n_turns},
                     {"target_wer", c.target_wer},
                     {"error_mix", {{"substitution", c.mix.substitution}, {"insertion", c.mix.insertion}, {"deletion", c.mix.deletion}}},
                     {"ood_fraction", c.ood_fraction},
                     {"off_grammar_fraction", c.off_grammar_fraction},
                     {"score_slope", c.score_slope},
                     {"score_noise", c.score_noise},
                     {"filler_words", c.filler_words}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  try {
    c = SynthConfig{};
    if (j.contains("catalog")) c.catalog = j["catalog"].get<Catalog>();
    c.n_turns = j.value("n_turns", c.n_turns);
    c.target_wer = j.value("target_wer", c.target_wer);
    if (j.contains("error_mix")) {
      const auto& m = j["error_mix"];
      c.mix.substitution = m.value("substitution", c.mix.substitution);
      c.mix.insertion = m.value("insertion", c.mix.insertion);
      c.mix.deletion = m.value("deletion", c.mix.deletion);
    }
    c.ood_fraction = j.value("ood_fraction", c.ood_fraction);
    c.off_grammar_fraction = j.value("off_grammar_fraction", c.off_grammar_fraction);
    c.score_slope = j.value("score_slope", c.score_slope);
    c.score_noise = j.value("score_noise", c.score_noise);
    c.filler_words = j.value("filler_words", c.filler_words);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
}

}  // namespace noisychannel
