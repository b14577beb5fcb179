#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "noisychannel/catalog.hpp"
#include "noisychannel/confusion.hpp"
#include "noisychannel/environment.hpp"
#include "noisychannel/score_model.hpp"

namespace noisychannel {

enum class DialogAction { Execute = 0, Confirm = 1, Repeat = 2 };
inline constexpr std::size_t kDialogActions = 3;

// prev_action also takes "none" at the start of an episode.
enum class PrevAction { None = 0, Execute = 1, Confirm = 2, Repeat = 3 };

enum class UserEvent { None, PositiveSentiment, NegativeSentiment, BargeIn };

const char* to_string(DialogAction a);
const char* to_string(UserEvent e);

struct UserGoal {
  std::string intent;
  std::string slot;
};

struct DialogState {
  std::string hyp_intent;
  std::string hyp_slot;
  double score = 0.0;
  PrevAction prev_action = PrevAction::None;
  std::size_t total_clarifications = 0;
  std::size_t request_clarifications = 0;
};

struct RewardConfig {
  double execute_correct = 1.0;
  double execute_wrong = -1.0;
  double confirm = -0.33;
  double repeat = -0.50;
  double positive_sentiment = 0.17;
  double negative_sentiment = -0.17;
  double barge_in = -0.17;
};

struct EnvConfig {
  Catalog catalog = default_catalog();
  RewardConfig rewards;
  // Positive sentiment may follow a turn whose hypothesis matches the goal;
  // negative sentiment and barge-in may follow each clarification beyond the
  // first. At most one event per turn.
  double positive_prob = 0.05;
  double negative_prob = 0.05;
  double barge_in_prob = 0.05;
  std::size_t max_clarifications = 4;  // further clarifications become execute
  std::size_t window = 1;
  double confirm_flip = 0.05;  // chance the yes/no answer is misheard
};

// Reward of one turn: action reward plus event reward.
double step_reward(const RewardConfig& rewards, DialogAction action, bool correct, UserEvent event);

// Embedding ids: 0 is window padding, 1 the "ood" intent or empty slot, then
// catalog entries in order.
int intent_id(const Catalog& catalog, const std::string& intent);
int slot_id(const Catalog& catalog, const std::string& slot);

// Per window turn (most recent first): ids (intent, slot) and numeric
// features (score, one-hot prev_action over none/execute/confirm/repeat,
// total_clarifications, request_clarifications). Turns before the start of
// the episode are zero-padded.
Observation encode_state(const std::vector<DialogState>& history, std::size_t window, const Catalog& catalog);
inline constexpr std::size_t kNumericPerTurn = 7;

struct StepOutcome {
  DialogState next_state;
  DialogAction taken = DialogAction::Execute;  // differs from the request when forced
  double reward = 0.0;
  bool done = false;
  bool correct = false;  // execute matched the goal
  UserEvent user_event = UserEvent::None;
};

// Clarification dialog over one user request. The user utterance is
// rendered from an in-grammar template, corrupted by the confusion model,
// scored by the score model (or by clamp(1 - WER) when none is given) and
// interpreted by toy_nlu.
class DialogEnv : public Environment {
 public:
  DialogEnv(EnvConfig config, const ConfusionModel& channel, const ScoreModel* scorer);

  std::size_t n_actions() const override { return kDialogActions; }
  std::size_t n_numeric() const override { return config_.window * kNumericPerTurn; }
  std::vector<std::size_t> id_tables() const override;
  std::vector<std::size_t> table_sizes() const override;

  Observation reset(Rng& rng) override;
  StepResult step(std::size_t action, Rng& rng) override;

  void reset_episode(Rng& rng);
  // Throws DomainError once the episode is done.
  StepOutcome env_step(DialogAction action, Rng& rng);

  const DialogState& state() const { return history_.back(); }
  const UserGoal& goal() const { return goal_; }
  const Tokens& utterance() const { return utterance_; }
  const Tokens& hypothesis() const { return hypothesis_; }
  bool done() const { return done_; }
  bool hypothesis_correct() const;
  const EnvConfig& config() const { return config_; }

 private:
  void hear(Rng& rng);

  EnvConfig config_;
  const ConfusionModel& channel_;
  const ScoreModel* scorer_;
  std::vector<const UtteranceTemplate*> speakable_;

  UserGoal goal_;
  Tokens utterance_;
  Tokens hypothesis_;
  std::vector<DialogState> history_;
  bool done_ = true;
};

// Fraction of n fresh episodes (episode i seeded from (seed, i)) whose first
// hypothesis misreads the goal.
double measure_reset_ser(DialogEnv& env, std::size_t n, std::uint64_t seed);

void to_json(nlohmann::json& j, const RewardConfig& r);
void from_json(const nlohmann::json& j, RewardConfig& r);
void to_json(nlohmann::json& j, const EnvConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);

}  // namespace noisychannel
