#include "noisychannel/pipeline.hpp"

#include <chrono>
#include <fstream>

#include "noisychannel/alignment.hpp"
#include "noisychannel/confusion.hpp"
#include "noisychannel/corpus.hpp"
#include "noisychannel/discriminator.hpp"
#include "noisychannel/errors.hpp"
#include "noisychannel/evalstats.hpp"
#include "noisychannel/nlu.hpp"

namespace noisychannel {

namespace {

constexpr const char* kSummaryFormat = "noisychannel.summary";
constexpr int kSummaryVersion = 1;

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump() << '\n';
}

Corpus with_predicted_scores(Corpus corpus, const ScoreModel& model, Rng& rng) {
  for (auto& t : corpus.turns) t.score = predict_score(model, t.reference, t.hypothesis, rng);
  return corpus;
}

std::vector<double> scores_of(const Corpus& c) {
  std::vector<double> s;
  s.reserve(c.size());
  for (const auto& t : c.turns) s.push_back(t.score);
  return s;
}

nlohmann::json share_deltas(const ErrorStats& reference, const ErrorStats& other) {
  return {{"substitution", other.sub_share - reference.sub_share},
          {"insertion", other.ins_share - reference.ins_share},
          {"deletion", other.del_share - reference.del_share}};
}

nlohmann::json semantic_report(const Corpus& real, const Corpus& simulated, const Catalog& catalog) {
  std::vector<SemanticObservation> real_obs, sim_obs;
  for (std::size_t i = 0; i < real.size(); ++i) {
    const auto& t = real.turns[i];
    if (!t.semantics) continue;
    const bool ood = t.out_of_domain.value_or(t.semantics->intent == kOodIntent);
    const NluResult gold{t.semantics->intent, t.semantics->slot, ood};
    const NluResult on_reference = toy_nlu(t.reference, catalog);
    real_obs.push_back({gold, on_reference, toy_nlu(t.hypothesis, catalog)});
    sim_obs.push_back({gold, on_reference, toy_nlu(simulated.turns[i].hypothesis, catalog)});
  }
  if (real_obs.empty()) return nullptr;
  return {{"real", semantic_error_rates(real_obs)}, {"simulated", semantic_error_rates(sim_obs)}};
}

}  // namespace

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json{{"seed", c.seed},
                     {"synth", c.synth},
                     {"train_fraction", c.train_fraction},
                     {"max_fragment_len", c.max_fragment_len},
                     {"target_wer", c.target_wer ? nlohmann::json(*c.target_wer) : nlohmann::json(nullptr)},
                     {"score", {{"learner", c.score.learner}, {"max_terms", c.score.max_terms}}},
                     {"discriminator", c.discriminator},
                     {"kl_smoothing", c.kl_smoothing},
                     {"env", c.env},
                     {"env_score_mode", to_string(c.env_score_mode)},
                     {"policy", c.policy},
                     {"policy_seeds", c.policy_seeds},
                     {"policy_eval_episodes", c.policy_eval_episodes},
                     {"ser_episodes", c.ser_episodes}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  try {
    c = PipelineConfig{};
    c.seed = j.value("seed", c.seed);
    if (j.contains("synth")) c.synth = j.at("synth").get<SynthConfig>();
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.max_fragment_len = j.value("max_fragment_len", c.max_fragment_len);
    if (j.contains("target_wer") && !j.at("target_wer").is_null()) c.target_wer = j.at("target_wer").get<double>();
    if (j.contains("score")) {
      const auto& s = j.at("score");
      if (s.contains("learner")) c.score.learner = s.at("learner").get<GbtConfig>();
      c.score.max_terms = s.value("max_terms", c.score.max_terms);
    }
    if (j.contains("discriminator")) c.discriminator = j.at("discriminator").get<GbtConfig>();
    c.kl_smoothing = j.value("kl_smoothing", c.kl_smoothing);
    if (j.contains("env")) c.env = j.at("env").get<EnvConfig>();
    c.env_score_mode = parse_score_mode(j.value("env_score_mode", std::string(to_string(c.env_score_mode))));
    if (j.contains("policy")) c.policy = j.at("policy").get<PolicyConfig>();
    c.policy_seeds = j.value("policy_seeds", c.policy_seeds);
    c.policy_eval_episodes = j.value("policy_eval_episodes", c.policy_eval_episodes);
    c.ser_episodes = j.value("ser_episodes", c.ser_episodes);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) throw ConfigError("pipeline config: train_fraction must lie in (0,1)");
  if (c.max_fragment_len == 0) throw ConfigError("pipeline config: max_fragment_len must be positive");
  if (c.policy_eval_episodes == 0 || c.ser_episodes == 0)
    throw ConfigError("pipeline config: policy_eval_episodes and ser_episodes must be positive");
  if (!(c.kl_smoothing >= 0.0)) throw ConfigError("pipeline config: kl_smoothing must be >= 0");
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j.get<PipelineConfig>();
}

std::string dump_summary(const nlohmann::json& summary) { return summary.dump(2) + "\n"; }

nlohmann::json full_pipeline(const PipelineConfig& config, const std::optional<std::filesystem::path>& out_dir,
                             PipelineTimings* timings) {
  PipelineTimings local_timings;
  PipelineTimings& tm = timings ? *timings : local_timings;
  tm = PipelineTimings{};
  if (out_dir) std::filesystem::create_directories(*out_dir);
  auto artifact = [&](const std::string& name) { return *out_dir / name; };
  const std::uint64_t seed = config.seed;

  nlohmann::json summary;
  summary["format"] = kSummaryFormat;
  summary["version"] = kSummaryVersion;
  summary["seed"] = seed;
  summary["config"] = config;

  // Simulation.
  Stopwatch watch;
  const Corpus corpus = synth_corpus(config.synth, child_seed(seed, "synth"));
  const auto [train, test] = split_corpus(corpus, config.train_fraction, child_seed(seed, "split"));
  ConfusionModel channel = build_confusion(train, config.max_fragment_len);
  if (config.target_wer) channel = adjust_self_frequency(channel, *config.target_wer);
  Rng sim_rng = child_stream(seed, "simulate");
  const Corpus sim_train = simulate_corpus(train, channel, sim_rng);
  const Corpus sim_test = simulate_corpus(test, channel, sim_rng);
  tm.simulation = watch.lap();

  const ErrorStats train_stats = aggregate_error_stats(train);
  const ErrorStats real_test_stats = aggregate_error_stats(test);
  const ErrorStats sim_test_stats = aggregate_error_stats(sim_test);
  summary["corpus"] = {{"turns", corpus.size()}, {"train", train.size()}, {"test", test.size()}};
  summary["error_distribution"] = {
      {"train", train_stats},
      {"real_test", real_test_stats},
      {"simulated_test", sim_test_stats},
      {"relative_wer_change", (sim_test_stats.corpus_wer - train_stats.corpus_wer) / train_stats.corpus_wer},
      {"share_deltas", share_deltas(train_stats, sim_test_stats)}};

  // Score models.
  watch.lap();
  const ScoreModel regression = train_score_model(train, ScoreMode::Regression, config.score);
  const ScoreModel classification = train_score_model(train, ScoreMode::Classification, config.score);
  const BaselineScorer baseline = fit_baseline(train);
  Rng eval_rng = child_stream(seed, "score.eval");
  const ScoreEvaluation reg_eval = eval_score_model(regression, test, eval_rng);
  const ScoreEvaluation cls_eval = eval_score_model(classification, test, eval_rng);
  const ScoreEvaluation base_eval = eval_baseline(baseline, test, eval_rng);
  tm.score_models = watch.lap();
  summary["score_model"] = {
      {"regression", reg_eval.metrics}, {"classification", cls_eval.metrics}, {"baseline", base_eval.metrics}};

  // Scores for the simulated hypotheses; their histograms against the real test scores.
  Rng score_rng = child_stream(seed, "score.simulate");
  const Corpus sim_train_reg = with_predicted_scores(sim_train, regression, score_rng);
  const Corpus sim_test_reg = with_predicted_scores(sim_test, regression, score_rng);
  const Corpus sim_train_cls = with_predicted_scores(sim_train, classification, score_rng);
  const Corpus sim_test_cls = with_predicted_scores(sim_test, classification, score_rng);
  const Histogram10 real_hist = score_histogram(scores_of(test));
  const Histogram10 reg_hist = score_histogram(scores_of(sim_test_reg));
  const Histogram10 cls_hist = score_histogram(scores_of(sim_test_cls));
  const Histogram10 reg_real_hyp = score_histogram(reg_eval.predictions);
  const Histogram10 cls_real_hyp = score_histogram(cls_eval.predictions);
  summary["score_distribution"] = {
      {"real", real_hist},
      {"regression", reg_hist},
      {"classification", cls_hist},
      {"real_shares", real_hist.shares()},
      {"regression_shares", reg_hist.shares()},
      {"classification_shares", cls_hist.shares()},
      {"regression_relative_bin_changes", relative_bin_changes(real_hist, reg_hist)},
      {"classification_relative_bin_changes", relative_bin_changes(real_hist, cls_hist)},
      {"kl_regression", kl_divergence(reg_hist, real_hist, config.kl_smoothing)},
      {"kl_classification", kl_divergence(cls_hist, real_hist, config.kl_smoothing)},
      {"real_hypotheses",
       {{"kl_regression", kl_divergence(reg_real_hyp, real_hist, config.kl_smoothing)},
        {"kl_classification", kl_divergence(cls_real_hyp, real_hist, config.kl_smoothing)}}}};

  // Discriminator.
  watch.lap();
  nlohmann::json disc;
  for (const bool dedup : {false, true}) {
    nlohmann::json block;
    auto run = [&](const char* name, const Corpus& sim_tr, const Corpus& sim_te, bool include_score) {
      const auto train_set = build_dataset(train, sim_tr, include_score, dedup, nullptr, config.score.max_terms);
      const auto test_set = build_dataset(test, sim_te, include_score, dedup, &train_set.featurizer);
      const auto model = train_discriminator(train_set, config.discriminator);
      block[name] = evaluate_discriminator(model, test_set);
      block["train_rows"] = train_set.rows.rows();
      block["test_rows"] = test_set.rows.rows();
    };
    run("without_score", sim_train, sim_test, false);
    run("regression_score", sim_train_reg, sim_test_reg, true);
    run("classification_score", sim_train_cls, sim_test_cls, true);
    block["classification_gap"] =
        block["classification_score"]["accuracy"].get<double>() - block["without_score"]["accuracy"].get<double>();
    disc[dedup ? "dedup" : "no_dedup"] = std::move(block);
  }
  tm.discriminator = watch.lap();
  summary["discriminator"] = std::move(disc);

  summary["semantic"] = semantic_report(test, sim_test, config.synth.catalog);

  auto save_artifacts = [&] {
    save_corpus(artifact("corpus.jsonl"), corpus);
    save_corpus(artifact("train.jsonl"), train);
    save_corpus(artifact("test.jsonl"), test);
    save_corpus(artifact("simulated_test_regression.jsonl"), sim_test_reg);
    save_corpus(artifact("simulated_test_classification.jsonl"), sim_test_cls);
    save_confusion(artifact("confusion.json"), channel);
    save_score_model(artifact("score_regression.json"), regression);
    save_score_model(artifact("score_classification.json"), classification);
    write_json(artifact("baseline_scorer.json"), baseline);
    std::ofstream out(artifact("summary.json"), std::ios::binary);
    if (!out) throw ValidationError("cannot write " + artifact("summary.json").string());
    out << dump_summary(summary);
  };

  // Dialog policy; policy_seeds = 0 skips the stage.
  summary["dialog"] = nullptr;
  if (config.policy_seeds == 0) {
    if (out_dir) save_artifacts();
    return summary;
  }
  const ScoreModel& env_scorer = config.env_score_mode == ScoreMode::Regression ? regression : classification;
  DialogEnv env(config.env, channel, &env_scorer);
  const double ser = measure_reset_ser(env, config.ser_episodes, child_seed(seed, "dialog.ser"));
  const std::uint64_t eval_seed = child_seed(seed, "dialog.eval");
  const PolicyReport execute_only = eval_policy(env, ExecuteOnlyPolicy(), config.policy_eval_episodes, eval_seed);
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t s = 0; s < config.policy_seeds; ++s) {
    watch.lap();
    const std::uint64_t policy_seed = child_seed(seed, "policy:" + std::to_string(s));
    const TrainedPolicy trained = train_policy(env, config.policy, policy_seed);
    const PolicyReport report = eval_policy(env, GreedyQPolicy(trained.network), config.policy_eval_episodes, eval_seed);
    tm.policy.push_back(watch.lap());
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& pt : trained.curve) curve.push_back({{"step", pt.step}, {"report", pt.report}});
    runs.push_back({{"seed", policy_seed},
                    {"trained", report},
                    {"success_gain", report.success_rate - execute_only.success_rate},
                    {"curve", std::move(curve)}});
    if (out_dir) save_policy(artifact("policy_" + std::to_string(s) + ".json"), trained);
  }
  summary["dialog"] = {{"measured_ser", ser},
                       {"execute_only", execute_only},
                       {"execute_only_vs_ser", execute_only.success_rate - (1.0 - ser)},
                       {"policies", std::move(runs)}};

  if (out_dir) save_artifacts();
  return summary;
}

}  // namespace noisychannel
