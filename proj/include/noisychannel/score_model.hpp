#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "noisychannel/corpus.hpp"
#include "noisychannel/evalstats.hpp"
#include "noisychannel/gbt.hpp"
#include "noisychannel/random.hpp"
#include "noisychannel/tfidf.hpp"

namespace noisychannel {

inline constexpr std::size_t kWerFeatureCount = 6;

// [TFIDF(hypothesis) | TFIDF(reference) | wer, ref_len, n_correct, n_ins, n_del, n_sub]
std::vector<double> featurize_pair(const Tokens& reference, const Tokens& hypothesis, const TfidfVocab& hyp_vocab,
                                   const TfidfVocab& ref_vocab);

// The two vocabularies behind featurize_pair, fitted on a corpus.
struct PairFeaturizer {
  TfidfVocab hyp_vocab;
  TfidfVocab ref_vocab;

  std::size_t dimension() const { return hyp_vocab.size() + ref_vocab.size() + kWerFeatureCount; }
  void featurize(const Tokens& reference, const Tokens& hypothesis, double* out) const;
  std::vector<double> featurize(const Tokens& reference, const Tokens& hypothesis) const;
};

PairFeaturizer fit_featurizer(const std::vector<const TranscribedTurn*>& turns, std::size_t max_terms);
PairFeaturizer fit_featurizer(const Corpus& corpus, std::size_t max_terms);

enum class ScoreMode { Regression, Classification };

ScoreMode parse_score_mode(const std::string& name);
const char* to_string(ScoreMode mode);

struct ScoreModelConfig {
  GbtConfig learner;
  std::size_t max_terms = 2000;
};

struct ScoreModel {
  PairFeaturizer featurizer;
  GbtEnsemble ensemble;
  ScoreMode mode = ScoreMode::Regression;
  // Classification mode: the training scores falling in each decile.
  std::array<std::vector<double>, 10> bin_pools;
};

// Throws DomainError with fewer than 100 training turns.
ScoreModel train_score_model(const Corpus& train, ScoreMode mode, const ScoreModelConfig& cfg = {});

// Regression: clamped ensemble output (the rng is not touched).
// Classification: uniform draw from the pool of the most probable bin, or the
// bin midpoint when that pool is empty.
double predict_score(const ScoreModel& model, const Tokens& reference, const Tokens& hypothesis, Rng& rng);

// Training score pools split by whether the hypothesis matched the reference.
struct BaselineScorer {
  std::vector<double> error_pool;
  std::vector<double> no_error_pool;
};

BaselineScorer fit_baseline(const Corpus& train);

struct BaselineDraw {
  double score = 0.0;
  bool fell_back = false;  // the selected pool was empty; drew from the other one
};

// Throws DomainError when both pools are empty.
BaselineDraw baseline_score(const BaselineScorer& pools, bool has_error, Rng& rng);

struct ScoreEvaluation {
  CorrelationMae metrics;
  std::vector<double> predictions;
};

// Scores every test turn's real hypothesis and compares with its real score.
// Throws DomainError with fewer than 2 test turns.
ScoreEvaluation eval_score_model(const ScoreModel& model, const Corpus& test, Rng& rng);
ScoreEvaluation eval_baseline(const BaselineScorer& baseline, const Corpus& test, Rng& rng);

void to_json(nlohmann::json& j, const ScoreModel& m);
void from_json(const nlohmann::json& j, ScoreModel& m);
void to_json(nlohmann::json& j, const BaselineScorer& b);
void from_json(const nlohmann::json& j, BaselineScorer& b);
void save_score_model(const std::filesystem::path& path, const ScoreModel& model);
ScoreModel load_score_model(const std::filesystem::path& path);

}  // namespace noisychannel
