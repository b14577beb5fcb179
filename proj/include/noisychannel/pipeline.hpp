#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "noisychannel/dialog_env.hpp"
#include "noisychannel/gbt.hpp"
#include "noisychannel/policy.hpp"
#include "noisychannel/score_model.hpp"
#include "noisychannel/synth.hpp"

namespace noisychannel {

struct PipelineConfig {
  std::uint64_t seed = 1234;
  SynthConfig synth;
  double train_fraction = 0.75;
  std::size_t max_fragment_len = 3;
  std::optional<double> target_wer;  // rescale the channel to this WER before simulating
  ScoreModelConfig score;
  GbtConfig discriminator;
  double kl_smoothing = 1.0;
  EnvConfig env;
  ScoreMode env_score_mode = ScoreMode::Regression;
  PolicyConfig policy;
  std::size_t policy_seeds = 3;  // 0 skips the dialog stage
  std::size_t policy_eval_episodes = 500;
  std::size_t ser_episodes = 2000;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Wall-clock seconds per stage. Kept out of the summary so that summaries
// of runs with one seed are byte-identical.
struct PipelineTimings {
  double simulation = 0.0;  // synth, split, train-confusion, simulate
  double score_models = 0.0;  // train both modes and evaluate
  double discriminator = 0.0;
  std::vector<double> policy;  // train + evaluate, per seed
};

// synth -> split -> train-confusion -> simulate -> train-score (both modes)
// -> discriminate (without score, regression score, classification score;
// each with and without dedup) -> eval-dist -> train-policy -> eval-policy
// (trained and execute-only, paired episodes). Returns the summary report;
// with out_dir, also writes every intermediate artifact and summary.json
// there.
nlohmann::json full_pipeline(const PipelineConfig& config, const std::optional<std::filesystem::path>& out_dir = {},
                             PipelineTimings* timings = nullptr);

// Serialization used for summary.json (sorted keys, two-space indent).
std::string dump_summary(const nlohmann::json& summary);

}  // namespace noisychannel
