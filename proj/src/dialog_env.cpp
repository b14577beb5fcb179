#include "noisychannel/dialog_env.hpp"

#include <algorithm>

#include "noisychannel/alignment.hpp"
#include "noisychannel/errors.hpp"
#include "noisychannel/nlu.hpp"

namespace noisychannel {

const char* to_string(DialogAction a) {
  switch (a) {
    case DialogAction::Execute: return "execute";
    case DialogAction::Confirm: return "confirm";
    case DialogAction::Repeat: return "repeat";
  }
  return "?";
}

const char* to_string(UserEvent e) {
  switch (e) {
    case UserEvent::None: return "none";
    case UserEvent::PositiveSentiment: return "positive_sentiment";
    case UserEvent::NegativeSentiment: return "negative_sentiment";
    case UserEvent::BargeIn: return "barge_in";
  }
  return "?";
}

double step_reward(const RewardConfig& rewards, DialogAction action, bool correct, UserEvent event) {
  double r = 0.0;
  switch (action) {
    case DialogAction::Execute: r = correct ? rewards.execute_correct : rewards.execute_wrong; break;
    case DialogAction::Confirm: r = rewards.confirm; break;
    case DialogAction::Repeat: r = rewards.repeat; break;
  }
  switch (event) {
    case UserEvent::None: break;
    case UserEvent::PositiveSentiment: r += rewards.positive_sentiment; break;
    case UserEvent::NegativeSentiment: r += rewards.negative_sentiment; break;
    case UserEvent::BargeIn: r += rewards.barge_in; break;
  }
  return r;
}

int intent_id(const Catalog& catalog, const std::string& intent) {
  auto it = std::find(catalog.intents.begin(), catalog.intents.end(), intent);
  return it == catalog.intents.end() ? 1 : 2 + static_cast<int>(it - catalog.intents.begin());
}

int slot_id(const Catalog& catalog, const std::string& slot) {
  auto it = std::find(catalog.slots.begin(), catalog.slots.end(), slot);
  return it == catalog.slots.end() ? 1 : 2 + static_cast<int>(it - catalog.slots.begin());
}

Observation encode_state(const std::vector<DialogState>& history, std::size_t window, const Catalog& catalog) {
  Observation obs;
  obs.ids.assign(2 * window, 0);
  obs.numeric.assign(kNumericPerTurn * window, 0.0);
  for (std::size_t w = 0; w < window && w < history.size(); ++w) {
    const DialogState& s = history[history.size() - 1 - w];
    obs.ids[2 * w] = intent_id(catalog, s.hyp_intent);
    obs.ids[2 * w + 1] = slot_id(catalog, s.hyp_slot);
    double* f = obs.numeric.data() + kNumericPerTurn * w;
    f[0] = s.score;
    f[1 + static_cast<int>(s.prev_action)] = 1.0;
    f[5] = static_cast<double>(s.total_clarifications);
    f[6] = static_cast<double>(s.request_clarifications);
  }
  return obs;
}

DialogEnv::DialogEnv(EnvConfig config, const ConfusionModel& channel, const ScoreModel* scorer)
    : config_(std::move(config)), channel_(channel), scorer_(scorer) {
  if (config_.catalog.intents.empty() || config_.catalog.slots.empty())
    throw ConfigError("dialog env: catalog needs at least one intent and one slot");
  if (config_.window == 0) throw ConfigError("dialog env: window must be positive");
  for (const auto& intent : config_.catalog.intents) {
    if (config_.catalog.templates_for(intent, true).empty())
      throw ConfigError("dialog env: no in-grammar template for intent '" + intent + "'");
  }
}

std::vector<std::size_t> DialogEnv::id_tables() const {
  std::vector<std::size_t> t;
  for (std::size_t w = 0; w < config_.window; ++w) {
    t.push_back(0);
    t.push_back(1);
  }
  return t;
}

std::vector<std::size_t> DialogEnv::table_sizes() const {
  return {config_.catalog.intents.size() + 2, config_.catalog.slots.size() + 2};
}

bool DialogEnv::hypothesis_correct() const {
  const auto& s = state();
  return s.hyp_intent == goal_.intent && s.hyp_slot == goal_.slot;
}

void DialogEnv::hear(Rng& rng) {
  hypothesis_ = simulate_hypothesis(utterance_, channel_, rng);
  DialogState& s = history_.back();
  s.score = scorer_ ? predict_score(*scorer_, utterance_, hypothesis_, rng)
                    : std::clamp(1.0 - wer_features(utterance_, hypothesis_).wer, 0.0, 1.0);
  const NluResult nlu = toy_nlu(hypothesis_, config_.catalog);
  s.hyp_intent = nlu.intent;
  s.hyp_slot = nlu.slot;
}

void DialogEnv::reset_episode(Rng& rng) {
  const auto& cat = config_.catalog;
  std::uniform_int_distribution<std::size_t> pick_intent(0, cat.intents.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_slot(0, cat.slots.size() - 1);
  goal_.intent = cat.intents[pick_intent(rng)];
  goal_.slot = cat.slots[pick_slot(rng)];
  const auto templates = cat.templates_for(goal_.intent, true);
  std::uniform_int_distribution<std::size_t> pick_template(0, templates.size() - 1);
  utterance_ = cat.render(*templates[pick_template(rng)], goal_.slot);

  history_.assign(1, DialogState{});
  done_ = false;
  hear(rng);
}

StepOutcome DialogEnv::env_step(DialogAction action, Rng& rng) {
  if (done_) throw DomainError("env_step: episode already finished");
  const DialogState prev = state();
  if (action != DialogAction::Execute && prev.request_clarifications >= config_.max_clarifications)
    action = DialogAction::Execute;

  StepOutcome out;
  out.taken = action;
  DialogState next = prev;
  if (action == DialogAction::Execute) {
    out.correct = hypothesis_correct();
    out.done = true;
    next.prev_action = PrevAction::Execute;
    history_.push_back(next);
  } else {
    ++next.total_clarifications;
    ++next.request_clarifications;
    if (action == DialogAction::Confirm) {
      next.prev_action = PrevAction::Confirm;
      const bool truthful_yes = hypothesis_correct();
      const bool heard_yes = truthful_yes != bernoulli(rng, config_.confirm_flip);
      history_.push_back(next);
      if (heard_yes) {
        history_.back().score = 1.0;
      } else {
        hear(rng);  // "no", then the user restates the request
      }
    } else {
      next.prev_action = PrevAction::Repeat;
      history_.push_back(next);
      hear(rng);
    }
  }

  // One draw decides the turn's user event.
  const bool weary = state().request_clarifications > 1;
  const bool on_track = hypothesis_correct();
  const double t_neg = weary ? config_.negative_prob : 0.0;
  const double t_barge = t_neg + (weary ? config_.barge_in_prob : 0.0);
  const double t_pos = t_barge + (on_track ? config_.positive_prob : 0.0);
  const double u = uniform01(rng);
  if (u < t_neg)
    out.user_event = UserEvent::NegativeSentiment;
  else if (u < t_barge)
    out.user_event = UserEvent::BargeIn;
  else if (u < t_pos)
    out.user_event = UserEvent::PositiveSentiment;

  out.reward = step_reward(config_.rewards, action, out.correct, out.user_event);
  out.next_state = state();
  done_ = out.done;
  return out;
}

Observation DialogEnv::reset(Rng& rng) {
  reset_episode(rng);
  return encode_state(history_, config_.window, config_.catalog);
}

StepResult DialogEnv::step(std::size_t action, Rng& rng) {
  if (action >= kDialogActions) throw DomainError("env_step: action index out of range");
  const StepOutcome o = env_step(static_cast<DialogAction>(action), rng);
  return {encode_state(history_, config_.window, config_.catalog), o.reward, o.done, o.correct};
}

double measure_reset_ser(DialogEnv& env, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("measure_reset_ser: need at least one episode");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(episode_seed(seed, i));
    env.reset_episode(rng);
    wrong += !env.hypothesis_correct();
  }
  return static_cast<double>(wrong) / static_cast<double>(n);
}

void to_json(nlohmann::json& j, const RewardConfig& r) {
  j = nlohmann::json{{"execute_correct", r.execute_correct},
                     {"execute_wrong", r.execute_wrong},
                     {"confirm", r.confirm},
                     {"repeat", r.repeat},
                     {"positive_sentiment", r.positive_sentiment},
                     {"negative_sentiment", r.negative_sentiment},
                     {"barge_in", r.barge_in}};
}

void from_json(const nlohmann::json& j, RewardConfig& r) {
  RewardConfig d;
  r.execute_correct = j.value("execute_correct", d.execute_correct);
  r.execute_wrong = j.value("execute_wrong", d.execute_wrong);
  r.confirm = j.value("confirm", d.confirm);
  r.repeat = j.value("repeat", d.repeat);
  r.positive_sentiment = j.value("positive_sentiment", d.positive_sentiment);
  r.negative_sentiment = j.value("negative_sentiment", d.negative_sentiment);
  r.barge_in = j.value("barge_in", d.barge_in);
}

void to_json(nlohmann::json& j, const EnvConfig& c) {
  j = nlohmann::json{{"catalog", c.catalog},
                     {"rewards", c.rewards},
                     {"positive_prob", c.positive_prob},
                     {"negative_prob", c.negative_prob},
                     {"barge_in_prob", c.barge_in_prob},
                     {"max_clarifications", c.max_clarifications},
                     {"window", c.window},
                     {"confirm_flip", c.confirm_flip}};
}

void from_json(const nlohmann::json& j, EnvConfig& c) {
  try {
    EnvConfig d;
    c.catalog = j.contains("catalog") ? j.at("catalog").get<Catalog>() : d.catalog;
    c.rewards = j.contains("rewards") ? j.at("rewards").get<RewardConfig>() : d.rewards;
    c.positive_prob = j.value("positive_prob", d.positive_prob);
    c.negative_prob = j.value("negative_prob", d.negative_prob);
    c.barge_in_prob = j.value("barge_in_prob", d.barge_in_prob);
    c.max_clarifications = j.value("max_clarifications", d.max_clarifications);
    c.window = j.value("window", d.window);
    c.confirm_flip = j.value("confirm_flip", d.confirm_flip);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("env config: ") + e.what());
  }
  for (double p : {c.positive_prob, c.negative_prob, c.barge_in_prob, c.confirm_flip}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("env config: probabilities must lie in [0,1]");
  }
  if (c.negative_prob + c.barge_in_prob + c.positive_prob > 1.0)
    throw ConfigError("env config: event probabilities sum above 1");
  if (c.window == 0) throw ConfigError("env config: window must be positive");
}

}  // namespace noisychannel
