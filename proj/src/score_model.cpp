#include "noisychannel/score_model.hpp"

#include <algorithm>
#include <fstream>

#include "noisychannel/alignment.hpp"
#include "noisychannel/errors.hpp"

namespace noisychannel {

namespace {

constexpr const char* kFormat = "noisychannel.score_model";
constexpr int kVersion = 1;

void wer_block(const Tokens& reference, const Tokens& hypothesis, double* out) {
  const auto f = wer_features(reference, hypothesis);
  out[0] = f.wer;
  out[1] = static_cast<double>(f.ref_len);
  out[2] = static_cast<double>(f.n_correct);
  out[3] = static_cast<double>(f.n_ins);
  out[4] = static_cast<double>(f.n_del);
  out[5] = static_cast<double>(f.n_sub);
}

double draw_from(const std::vector<double>& pool, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

ScoreEvaluation evaluate(const Corpus& test, auto&& predict) {
  if (test.size() < 2) throw DomainError("eval_score_model: need at least 2 test turns");
  ScoreEvaluation out;
  std::vector<double> actual;
  out.predictions.reserve(test.size());
  actual.reserve(test.size());
  for (const auto& turn : test.turns) {
    out.predictions.push_back(predict(turn));
    actual.push_back(turn.score);
  }
  out.metrics = correlation_mae(out.predictions, actual);
  return out;
}

}  // namespace

void PairFeaturizer::featurize(const Tokens& reference, const Tokens& hypothesis, double* out) const {
  hyp_vocab.transform(hypothesis, out);
  ref_vocab.transform(reference, out + hyp_vocab.size());
  wer_block(reference, hypothesis, out + hyp_vocab.size() + ref_vocab.size());
}

std::vector<double> PairFeaturizer::featurize(const Tokens& reference, const Tokens& hypothesis) const {
  std::vector<double> out(dimension());
  featurize(reference, hypothesis, out.data());
  return out;
}

std::vector<double> featurize_pair(const Tokens& reference, const Tokens& hypothesis, const TfidfVocab& hyp_vocab,
                                   const TfidfVocab& ref_vocab) {
  return PairFeaturizer{hyp_vocab, ref_vocab}.featurize(reference, hypothesis);
}

PairFeaturizer fit_featurizer(const std::vector<const TranscribedTurn*>& turns, std::size_t max_terms) {
  std::vector<const Tokens*> hyps, refs;
  hyps.reserve(turns.size());
  refs.reserve(turns.size());
  for (const auto* t : turns) {
    hyps.push_back(&t->hypothesis);
    refs.push_back(&t->reference);
  }
  return {fit_tfidf(hyps, max_terms), fit_tfidf(refs, max_terms)};
}

PairFeaturizer fit_featurizer(const Corpus& corpus, std::size_t max_terms) {
  std::vector<const TranscribedTurn*> turns;
  for (const auto& t : corpus.turns) turns.push_back(&t);
  return fit_featurizer(turns, max_terms);
}

ScoreMode parse_score_mode(const std::string& name) {
  if (name == "regression") return ScoreMode::Regression;
  if (name == "classification") return ScoreMode::Classification;
  throw ConfigError("unknown score mode '" + name + "' (expected regression or classification)");
}

const char* to_string(ScoreMode mode) { return mode == ScoreMode::Regression ? "regression" : "classification"; }

ScoreModel train_score_model(const Corpus& train, ScoreMode mode, const ScoreModelConfig& cfg) {
  if (train.size() < 100) throw DomainError("train_score_model: need at least 100 training turns");
  ScoreModel model;
  model.mode = mode;
  model.featurizer = fit_featurizer(train, cfg.max_terms);

  FeatureMatrix X(train.size(), model.featurizer.dimension());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& t = train.turns[i];
    model.featurizer.featurize(t.reference, t.hypothesis, X.row(i).data());
  }
  if (mode == ScoreMode::Regression) {
    std::vector<double> y;
    y.reserve(train.size());
    for (const auto& t : train.turns) y.push_back(t.score);
    model.ensemble = fit_regression(X, y, cfg.learner);
  } else {
    std::vector<std::size_t> labels;
    labels.reserve(train.size());
    for (const auto& t : train.turns) {
      labels.push_back(score_bin(t.score));
      model.bin_pools[labels.back()].push_back(t.score);
    }
    model.ensemble = fit_classification(X, labels, 10, cfg.learner);
  }
  return model;
}

double predict_score(const ScoreModel& model, const Tokens& reference, const Tokens& hypothesis, Rng& rng) {
  const auto x = model.featurizer.featurize(reference, hypothesis);
  if (model.mode == ScoreMode::Regression) return std::clamp(predict_value(model.ensemble, x), 0.0, 1.0);
  const std::size_t bin = predict_class(model.ensemble, x);
  const auto& pool = model.bin_pools[bin];
  if (pool.empty()) return (static_cast<double>(bin) + 0.5) / 10.0;
  return draw_from(pool, rng);
}

BaselineScorer fit_baseline(const Corpus& train) {
  BaselineScorer b;
  for (const auto& t : train.turns) (t.has_error() ? b.error_pool : b.no_error_pool).push_back(t.score);
  return b;
}

BaselineDraw baseline_score(const BaselineScorer& pools, bool has_error, Rng& rng) {
  const auto& wanted = has_error ? pools.error_pool : pools.no_error_pool;
  const auto& other = has_error ? pools.no_error_pool : pools.error_pool;
  if (!wanted.empty()) return {draw_from(wanted, rng), false};
  if (other.empty()) throw DomainError("baseline_score: both score pools are empty");
  return {draw_from(other, rng), true};
}

ScoreEvaluation eval_score_model(const ScoreModel& model, const Corpus& test, Rng& rng) {
  return evaluate(test, [&](const TranscribedTurn& t) { return predict_score(model, t.reference, t.hypothesis, rng); });
}

ScoreEvaluation eval_baseline(const BaselineScorer& baseline, const Corpus& test, Rng& rng) {
  return evaluate(test, [&](const TranscribedTurn& t) { return baseline_score(baseline, t.has_error(), rng).score; });
}

void to_json(nlohmann::json& j, const ScoreModel& m) {
  j = nlohmann::json::object();
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["mode"] = to_string(m.mode);
  j["hyp_vocab"] = m.featurizer.hyp_vocab;
  j["ref_vocab"] = m.featurizer.ref_vocab;
  j["ensemble"] = m.ensemble;
  j["bin_pools"] = m.bin_pools;
}

void from_json(const nlohmann::json& j, ScoreModel& m) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ConfigError("not a score model file");
    if (j.at("version").get<int>() != kVersion) throw ConfigError("unsupported score model version");
    m = ScoreModel{};
    m.mode = parse_score_mode(j.at("mode").get<std::string>());
    m.featurizer.hyp_vocab = j.at("hyp_vocab").get<TfidfVocab>();
    m.featurizer.ref_vocab = j.at("ref_vocab").get<TfidfVocab>();
    m.ensemble = j.at("ensemble").get<GbtEnsemble>();
    m.bin_pools = j.at("bin_pools").get<std::array<std::vector<double>, 10>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("score model: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const BaselineScorer& b) {
  j = nlohmann::json{{"error_pool", b.error_pool}, {"no_error_pool", b.no_error_pool}};
}

void from_json(const nlohmann::json& j, BaselineScorer& b) {
  b.error_pool = j.at("error_pool").get<std::vector<double>>();
  b.no_error_pool = j.at("no_error_pool").get<std::vector<double>>();
}

void save_score_model(const std::filesystem::path& path, const ScoreModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << nlohmann::json(model).dump() << '\n';
}

ScoreModel load_score_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j.get<ScoreModel>();
}

}  // namespace noisychannel
