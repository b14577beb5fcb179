#include "noisychannel/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "noisychannel/alignment.hpp"
#include "noisychannel/confusion.hpp"
#include "noisychannel/corpus.hpp"
#include "noisychannel/dialog_env.hpp"
#include "noisychannel/discriminator.hpp"
#include "noisychannel/errors.hpp"
#include "noisychannel/evalstats.hpp"
#include "noisychannel/nlu.hpp"
#include "noisychannel/pipeline.hpp"
#include "noisychannel/policy.hpp"
#include "noisychannel/score_model.hpp"
#include "noisychannel/synth.hpp"

namespace noisychannel {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t default_seed() {
  const char* raw = std::getenv("NOISY_CHANNEL_SEED");
  if (!raw || !*raw) return kDefaultSeed;
  const std::string text(raw);
  if (text.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("NOISY_CHANNEL_SEED must be an unsigned integer, got '" + text + "'");
  try {
    return std::stoull(text);
  } catch (const std::out_of_range&) {
    throw ConfigError("NOISY_CHANNEL_SEED is out of range: '" + text + "'");
  }
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

bool is_csv(const fs::path& path) { return path.extension() == ".csv"; }

std::string num(double v) { return json(v).dump(); }

// Everything a subcommand needs to describe its run in the manifest.
struct Run {
  std::string command;
  std::optional<std::uint64_t> seed_flag;
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::pair<std::string, std::string>> outputs;

  std::uint64_t seed() const { return seed_flag ? *seed_flag : default_seed(); }
};

void write_manifest(const fs::path& path, const Run& run, std::uint64_t seed, double seconds) {
  json inputs = json::object(), outputs = json::object();
  for (const auto& [k, v] : run.inputs) inputs[k] = v;
  for (const auto& [k, v] : run.outputs) outputs[k] = v;
  const json manifest{{"command", run.command},
                      {"config_path", run.config_path.empty() ? json(nullptr) : json(run.config_path)},
                      {"seed", seed},
                      {"inputs", inputs},
                      {"outputs", outputs},
                      {"tool_version", kToolVersion},
                      {"wall_clock_seconds", seconds}};
  write_text(path, manifest.dump(2) + "\n");
}

fs::path manifest_path_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

std::string discriminator_csv(const DiscriminatorReport& r) {
  return "accuracy,precision,recall,f_score\n" + num(r.accuracy) + "," + num(r.precision) + "," + num(r.recall) +
         "," + num(r.f_score) + "\n";
}

std::string policy_csv(const std::string& name, const PolicyReport& r) {
  return "policy,average_reward,average_turns_to_execute,success_rate\n" + name + "," + num(r.average_reward) + "," +
         num(r.average_turns_to_execute) + "," + num(r.success_rate) + "\n";
}

std::vector<double> scores_of(const Corpus& c) {
  std::vector<double> s;
  for (const auto& t : c.turns) s.push_back(t.score);
  return s;
}

ScoreModelConfig score_config_from(const std::string& path) {
  ScoreModelConfig cfg;
  if (path.empty()) return cfg;
  const json j = read_json(path);
  try {
    if (j.contains("learner")) cfg.learner = j.at("learner").get<GbtConfig>();
    cfg.max_terms = j.value("max_terms", cfg.max_terms);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-level ASR error simulation, realism evaluation and clarification-policy learning"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Run run;
  std::function<void(Run&)> action;
  fs::path manifest;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", run.seed_flag, "Root seed (default: $NOISY_CHANNEL_SEED or 1234)");
  };

  // synth-corpus
  struct {
    std::string config, out;
    std::optional<std::size_t> turns;
    std::optional<double> wer;
  } synth;
  auto* synth_cmd = app.add_subcommand("synth-corpus", "Generate a synthetic transcribed corpus");
  synth_cmd->add_option("--config", synth.config, "Synthesizer config (JSON)");
  synth_cmd->add_option("--turns", synth.turns, "Number of turns");
  synth_cmd->add_option("--wer", synth.wer, "Target word error rate");
  synth_cmd->add_option("--out", synth.out, "Output corpus (.jsonl or .csv)")->required();
  add_seed(synth_cmd);
  synth_cmd->callback([&] {
    action = [&](Run& r) {
      SynthConfig cfg = synth.config.empty() ? SynthConfig{} : read_json(synth.config).get<SynthConfig>();
      if (synth.turns) cfg.n_turns = *synth.turns;
      if (synth.wer) cfg.target_wer = *synth.wer;
      r.config_path = synth.config;
      save_corpus(synth.out, synth_corpus(cfg, r.seed()));
      r.outputs.push_back({"corpus", synth.out});
      manifest = manifest_path_for(synth.out);
    };
  });

  // split
  struct {
    std::string in, train_out, test_out;
    double fraction = 0.75;
  } split;
  auto* split_cmd = app.add_subcommand("split", "Shuffle a corpus into train and test parts");
  split_cmd->add_option("--in", split.in, "Input corpus")->required();
  split_cmd->add_option("--fraction", split.fraction, "Training fraction")->check(CLI::Range(0.0, 1.0));
  split_cmd->add_option("--train-out", split.train_out, "Training corpus output")->required();
  split_cmd->add_option("--test-out", split.test_out, "Test corpus output")->required();
  add_seed(split_cmd);
  split_cmd->callback([&] {
    action = [&](Run& r) {
      const auto [train, test] = split_corpus(load_corpus(split.in), split.fraction, r.seed());
      save_corpus(split.train_out, train);
      save_corpus(split.test_out, test);
      r.inputs.push_back({"corpus", split.in});
      r.outputs.push_back({"train", split.train_out});
      r.outputs.push_back({"test", split.test_out});
      manifest = manifest_path_for(split.train_out);
    };
  });

  // train-confusion
  struct {
    std::string in, out;
    std::size_t max_len = kDefaultMaxFragmentLen;
    std::optional<double> target_wer;
  } confusion;
  auto* conf_cmd = app.add_subcommand("train-confusion", "Learn an n-gram confusion model from aligned pairs");
  conf_cmd->add_option("--in", confusion.in, "Training corpus")->required();
  conf_cmd->add_option("--out", confusion.out, "Model output (JSON)")->required();
  conf_cmd->add_option("--max-len", confusion.max_len, "Longest reference fragment")->check(CLI::PositiveNumber);
  conf_cmd->add_option("--target-wer", confusion.target_wer, "Rescale self-replacements to this expected WER");
  conf_cmd->callback([&] {
    action = [&](Run& r) {
      ConfusionModel model = build_confusion(load_corpus(confusion.in), confusion.max_len);
      if (confusion.target_wer) model = adjust_self_frequency(model, *confusion.target_wer);
      save_confusion(confusion.out, model);
      r.inputs.push_back({"train", confusion.in});
      r.outputs.push_back({"model", confusion.out});
      manifest = manifest_path_for(confusion.out);
    };
  });

  // simulate
  struct {
    std::string model, in, out, score_model;
  } simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "Corrupt reference texts with a confusion model");
  sim_cmd->add_option("--model", simulate.model, "Confusion model (JSON)")->required();
  sim_cmd->add_option("--in", simulate.in, "Corpus whose references are simulated")->required();
  sim_cmd->add_option("--out", simulate.out, "Simulated corpus output")->required();
  sim_cmd->add_option("--score-model", simulate.score_model,
                      "Score model; without one the input scores are passed through");
  add_seed(sim_cmd);
  sim_cmd->callback([&] {
    action = [&](Run& r) {
      const ConfusionModel model = load_confusion(simulate.model);
      Rng sim_rng = child_stream(r.seed(), "simulate");
      Corpus result = simulate_corpus(load_corpus(simulate.in), model, sim_rng);
      r.inputs.push_back({"model", simulate.model});
      r.inputs.push_back({"references", simulate.in});
      if (!simulate.score_model.empty()) {
        const ScoreModel scorer = load_score_model(simulate.score_model);
        Rng score_rng = child_stream(r.seed(), "score");
        for (auto& t : result.turns) t.score = predict_score(scorer, t.reference, t.hypothesis, score_rng);
        r.inputs.push_back({"score_model", simulate.score_model});
      }
      save_corpus(simulate.out, result);
      r.outputs.push_back({"simulated", simulate.out});
      manifest = manifest_path_for(simulate.out);
    };
  });

  // train-score
  struct {
    std::string in, out, config, mode = "classification";
  } train_score;
  auto* ts_cmd = app.add_subcommand("train-score", "Train a confidence-score model");
  ts_cmd->add_option("--in", train_score.in, "Training corpus")->required();
  ts_cmd->add_option("--mode", train_score.mode, "regression or classification")
      ->check(CLI::IsMember({"regression", "classification"}));
  ts_cmd->add_option("--config", train_score.config, "Learner config (JSON: learner, max_terms)");
  ts_cmd->add_option("--out", train_score.out, "Model output (JSON)")->required();
  ts_cmd->callback([&] {
    action = [&](Run& r) {
      const ScoreModel model =
          train_score_model(load_corpus(train_score.in), parse_score_mode(train_score.mode), score_config_from(train_score.config));
      save_score_model(train_score.out, model);
      r.config_path = train_score.config;
      r.inputs.push_back({"train", train_score.in});
      r.outputs.push_back({"model", train_score.out});
      manifest = manifest_path_for(train_score.out);
    };
  });

  // eval-score
  struct {
    std::string model, baseline_train, in, out;
  } eval_score;
  auto* es_cmd = app.add_subcommand("eval-score", "Correlation and MAE of predicted against real scores");
  auto* es_model = es_cmd->add_option("--model", eval_score.model, "Score model (JSON)");
  auto* es_base = es_cmd->add_option("--baseline-train", eval_score.baseline_train,
                                     "Evaluate the pool-sampling baseline fitted on this corpus instead");
  es_model->excludes(es_base);
  es_cmd->add_option("--in", eval_score.in, "Test corpus")->required();
  es_cmd->add_option("--out", eval_score.out, "Report (.json or .csv)")->required();
  add_seed(es_cmd);
  es_cmd->callback([&] {
    if (eval_score.model.empty() == eval_score.baseline_train.empty())
      throw CLI::ValidationError("eval-score", "exactly one of --model and --baseline-train is required");
    action = [&](Run& r) {
      const Corpus test = load_corpus(eval_score.in);
      Rng rng = child_stream(r.seed(), "score.eval");
      std::string name;
      ScoreEvaluation e;
      if (!eval_score.model.empty()) {
        const ScoreModel model = load_score_model(eval_score.model);
        name = to_string(model.mode);
        e = eval_score_model(model, test, rng);
        r.inputs.push_back({"model", eval_score.model});
      } else {
        name = "baseline";
        e = eval_baseline(fit_baseline(load_corpus(eval_score.baseline_train)), test, rng);
        r.inputs.push_back({"baseline_train", eval_score.baseline_train});
      }
      r.inputs.push_back({"test", eval_score.in});
      if (is_csv(eval_score.out)) {
        write_text(eval_score.out, "model,linear_correlation,mean_abs_error\n" + name + "," +
                                       num(e.metrics.pearson_r) + "," + num(e.metrics.mae) + "\n");
      } else {
        write_text(eval_score.out, json{{"model", name}, {"metrics", e.metrics}}.dump(2) + "\n");
      }
      r.outputs.push_back({"report", eval_score.out});
      manifest = manifest_path_for(eval_score.out);
    };
  });

  // discriminate
  struct {
    std::string real_train, sim_train, real_test, sim_test, config, out;
    bool with_score = false, dedup = false;
  } disc;
  auto* d_cmd = app.add_subcommand("discriminate", "Train and test a real-vs-simulated classifier");
  d_cmd->add_option("--real-train", disc.real_train, "Real training corpus")->required();
  d_cmd->add_option("--sim-train", disc.sim_train, "Simulated training corpus (same references)")->required();
  d_cmd->add_option("--real-test", disc.real_test, "Real test corpus")->required();
  d_cmd->add_option("--sim-test", disc.sim_test, "Simulated test corpus (same references)")->required();
  d_cmd->add_flag("--with-score", disc.with_score, "Append the confidence score to the features");
  d_cmd->add_flag("--dedup", disc.dedup, "Drop repeated (reference, hypothesis) pairs on each side");
  d_cmd->add_option("--config", disc.config, "Learner config (JSON)");
  d_cmd->add_option("--out", disc.out, "Report (.json or .csv)")->required();
  d_cmd->callback([&] {
    action = [&](Run& r) {
      const GbtConfig learner = disc.config.empty() ? GbtConfig{} : read_json(disc.config).get<GbtConfig>();
      const auto train_set =
          build_dataset(load_corpus(disc.real_train), load_corpus(disc.sim_train), disc.with_score, disc.dedup);
      const auto test_set = build_dataset(load_corpus(disc.real_test), load_corpus(disc.sim_test), disc.with_score,
                                          disc.dedup, &train_set.featurizer);
      const DiscriminatorReport rep = evaluate_discriminator(train_discriminator(train_set, learner), test_set);
      write_text(disc.out, is_csv(disc.out) ? discriminator_csv(rep) : json(rep).dump(2) + "\n");
      r.config_path = disc.config;
      r.inputs = {{"real_train", disc.real_train}, {"sim_train", disc.sim_train},
                  {"real_test", disc.real_test},   {"sim_test", disc.sim_test}};
      r.outputs.push_back({"report", disc.out});
      manifest = manifest_path_for(disc.out);
    };
  });

  // eval-dist
  struct {
    std::string real, sim, out;
    double smoothing = 1.0;
  } dist;
  auto* dist_cmd = app.add_subcommand("eval-dist", "Compare error, score and NLU statistics of two corpora");
  dist_cmd->add_option("--real", dist.real, "Real corpus")->required();
  dist_cmd->add_option("--sim", dist.sim, "Simulated corpus over the same references")->required();
  dist_cmd->add_option("--smoothing", dist.smoothing, "Add-epsilon smoothing for KL")->check(CLI::NonNegativeNumber);
  dist_cmd->add_option("--out", dist.out, "Report (.csv: error table; .json: everything)")->required();
  dist_cmd->callback([&] {
    action = [&](Run& r) {
      const Corpus real = load_corpus(dist.real);
      const Corpus sim = load_corpus(dist.sim);
      if (real.size() != sim.size()) throw ValidationError("eval-dist: corpora differ in size");
      const ErrorStats rs = aggregate_error_stats(real);
      const ErrorStats ss = aggregate_error_stats(sim);
      const double rel = rs.corpus_wer > 0.0 ? (ss.corpus_wer - rs.corpus_wer) / rs.corpus_wer : 0.0;
      const Histogram10 rh = score_histogram(scores_of(real));
      const Histogram10 sh = score_histogram(scores_of(sim));
      const double kl = kl_divergence(sh, rh, dist.smoothing);
      if (is_csv(dist.out)) {
        std::ostringstream csv;
        csv << "system,wer,relative_wer_change,substitution_share,insertion_share,deletion_share,score_kl\n";
        csv << "real," << num(rs.corpus_wer) << ",0," << num(rs.sub_share) << "," << num(rs.ins_share) << ","
            << num(rs.del_share) << ",0\n";
        csv << "simulated," << num(ss.corpus_wer) << "," << num(rel) << "," << num(ss.sub_share) << ","
            << num(ss.ins_share) << "," << num(ss.del_share) << "," << num(kl) << "\n";
        write_text(dist.out, csv.str());
      } else {
        json report{{"real", rs},
                    {"simulated", ss},
                    {"relative_wer_change", rel},
                    {"real_scores", rh},
                    {"simulated_scores", sh},
                    {"score_kl", kl},
                    {"relative_bin_changes", relative_bin_changes(rh, sh)}};
        std::vector<SemanticObservation> real_obs, sim_obs;
        const Catalog catalog = default_catalog();
        for (std::size_t i = 0; i < real.size(); ++i) {
          const auto& t = real.turns[i];
          if (!t.semantics) continue;
          const NluResult gold{t.semantics->intent, t.semantics->slot, t.out_of_domain.value_or(false)};
          const NluResult ref = toy_nlu(t.reference, catalog);
          real_obs.push_back({gold, ref, toy_nlu(t.hypothesis, catalog)});
          sim_obs.push_back({gold, ref, toy_nlu(sim.turns[i].hypothesis, catalog)});
        }
        if (!real_obs.empty())
          report["semantic"] = {{"real", semantic_error_rates(real_obs)}, {"simulated", semantic_error_rates(sim_obs)}};
        write_text(dist.out, report.dump(2) + "\n");
      }
      r.inputs = {{"real", dist.real}, {"simulated", dist.sim}};
      r.outputs.push_back({"report", dist.out});
      manifest = manifest_path_for(dist.out);
    };
  });

  // train-policy / eval-policy share the environment options.
  struct {
    std::string confusion, score_model, env, config, policy, out;
    std::optional<std::size_t> steps;
    std::size_t episodes = 500;
    bool execute_only = false;
  } pol;
  auto add_env_options = [&](CLI::App* sub) {
    sub->add_option("--confusion", pol.confusion, "Confusion model (JSON)")->required();
    sub->add_option("--score-model", pol.score_model, "Score model (JSON); without one, score = 1 - WER");
    sub->add_option("--env", pol.env, "Environment config (JSON)");
  };
  auto make_env_parts = [&](Run& r) {
    EnvConfig cfg = pol.env.empty() ? EnvConfig{} : read_json(pol.env).get<EnvConfig>();
    ConfusionModel channel = load_confusion(pol.confusion);
    std::optional<ScoreModel> scorer;
    if (!pol.score_model.empty()) scorer = load_score_model(pol.score_model);
    r.inputs.push_back({"confusion", pol.confusion});
    if (!pol.score_model.empty()) r.inputs.push_back({"score_model", pol.score_model});
    if (!pol.env.empty()) r.inputs.push_back({"env", pol.env});
    return std::make_tuple(std::move(cfg), std::move(channel), std::move(scorer));
  };

  auto* tp_cmd = app.add_subcommand("train-policy", "Train a dueling double-DQN clarification policy");
  add_env_options(tp_cmd);
  tp_cmd->add_option("--config", pol.config, "Policy config (JSON)");
  tp_cmd->add_option("--steps", pol.steps, "Override total training steps")->check(CLI::PositiveNumber);
  tp_cmd->add_option("--out", pol.out, "Checkpoint output (JSON)")->required();
  add_seed(tp_cmd);
  tp_cmd->callback([&] {
    action = [&](Run& r) {
      auto [cfg, channel, scorer] = make_env_parts(r);
      PolicyConfig pcfg = pol.config.empty() ? PolicyConfig{} : read_json(pol.config).get<PolicyConfig>();
      if (pol.steps) pcfg.total_steps = *pol.steps;
      DialogEnv env(cfg, channel, scorer ? &*scorer : nullptr);
      const TrainedPolicy trained = train_policy(env, pcfg, r.seed());
      save_policy(pol.out, trained);
      if (!trained.curve.empty()) {
        const auto& last = trained.curve.back().report;
        out << "final greedy success " << last.success_rate << ", reward " << last.average_reward << ", turns "
            << last.average_turns_to_execute << "\n";
      }
      r.config_path = pol.config;
      r.outputs.push_back({"policy", pol.out});
      manifest = manifest_path_for(pol.out);
    };
  });

  auto* ep_cmd = app.add_subcommand("eval-policy", "Evaluate a policy greedily on seeded episodes");
  add_env_options(ep_cmd);
  auto* ep_policy = ep_cmd->add_option("--policy", pol.policy, "Policy checkpoint (JSON)");
  auto* ep_exec = ep_cmd->add_flag("--execute-only", pol.execute_only, "Evaluate the execute-only baseline");
  ep_policy->excludes(ep_exec);
  ep_cmd->add_option("--episodes", pol.episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  ep_cmd->add_option("--out", pol.out, "Report (.json or .csv)")->required();
  add_seed(ep_cmd);
  ep_cmd->callback([&] {
    if (pol.policy.empty() && !pol.execute_only)
      throw CLI::ValidationError("eval-policy", "one of --policy and --execute-only is required");
    action = [&](Run& r) {
      auto [cfg, channel, scorer] = make_env_parts(r);
      DialogEnv env(cfg, channel, scorer ? &*scorer : nullptr);
      const std::uint64_t eval_seed = child_seed(r.seed(), "dialog.eval");
      PolicyReport rep;
      std::string name;
      if (pol.execute_only) {
        name = "execute_only";
        rep = eval_policy(env, ExecuteOnlyPolicy(), pol.episodes, eval_seed);
      } else {
        name = "trained";
        const TrainedPolicy trained = load_policy(pol.policy);
        rep = eval_policy(env, GreedyQPolicy(trained.network), pol.episodes, eval_seed);
        r.inputs.push_back({"policy", pol.policy});
      }
      write_text(pol.out, is_csv(pol.out) ? policy_csv(name, rep) : json{{"policy", name}, {"report", rep}}.dump(2) + "\n");
      r.outputs.push_back({"report", pol.out});
      manifest = manifest_path_for(pol.out);
    };
  });

  // pipeline
  struct {
    std::string config, out;
  } pipe;
  auto* p_cmd = app.add_subcommand("pipeline", "Run every stage end to end and write a summary report");
  p_cmd->add_option("--config", pipe.config, "Pipeline config (JSON)");
  p_cmd->add_option("--out", pipe.out, "Output directory")->required();
  add_seed(p_cmd);
  p_cmd->callback([&] {
    action = [&](Run& r) {
      PipelineConfig cfg = pipe.config.empty() ? PipelineConfig{} : load_pipeline_config(pipe.config);
      if (r.seed_flag || std::getenv("NOISY_CHANNEL_SEED")) cfg.seed = r.seed();
      r.seed_flag = cfg.seed;  // the manifest records the seed actually used
      r.config_path = pipe.config;
      const json summary = full_pipeline(cfg, fs::path(pipe.out));
      r.outputs.push_back({"directory", pipe.out});
      r.outputs.push_back({"summary", (fs::path(pipe.out) / "summary.json").string()});
      manifest = fs::path(pipe.out) / "manifest.json";
      out << "summary written to " << (fs::path(pipe.out) / "summary.json").string() << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  for (auto* sub : app.get_subcommands()) run.command = sub->get_name();
  const auto start = std::chrono::steady_clock::now();
  try {
    run.seed();  // reject a malformed NOISY_CHANNEL_SEED before doing any work
    action(run);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(manifest, run, run.seed(), seconds);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace noisychannel
