#include <doctest.h>

#include "noisychannel/confusion.hpp"
#include "noisychannel/dialog_env.hpp"
#include "noisychannel/errors.hpp"
#include "noisychannel/nlu.hpp"
#include "noisychannel/policy.hpp"
#include "noisychannel/qnetwork.hpp"
#include "noisychannel/synth.hpp"

using namespace noisychannel;

namespace {

const ConfusionModel& noisy_channel() {
  static const ConfusionModel m = [] {
    SynthConfig cfg;
    cfg.target_wer = 0.3;
    return build_confusion(synth_corpus(cfg, 31));
  }();
  return m;
}

const ConfusionModel& clean_channel() {
  static const ConfusionModel m = adjust_self_frequency(noisy_channel(), 0.0);
  return m;
}

EnvConfig quiet() {
  EnvConfig c;
  c.positive_prob = c.negative_prob = c.barge_in_prob = 0.0;
  return c;
}

}  // namespace

TEST_CASE("reward table") {
  const RewardConfig r;
  CHECK(step_reward(r, DialogAction::Execute, true, UserEvent::None) == 1.0);
  CHECK(step_reward(r, DialogAction::Execute, false, UserEvent::None) == -1.0);
  CHECK(step_reward(r, DialogAction::Confirm, false, UserEvent::None) == -0.33);
  CHECK(step_reward(r, DialogAction::Repeat, false, UserEvent::None) == -0.5);
  CHECK(step_reward(r, DialogAction::Execute, false, UserEvent::BargeIn) == doctest::Approx(-1.17));
  CHECK(step_reward(r, DialogAction::Execute, true, UserEvent::PositiveSentiment) == doctest::Approx(1.17));
  CHECK(step_reward(r, DialogAction::Confirm, false, UserEvent::NegativeSentiment) == doctest::Approx(-0.5));
  CHECK(step_reward(r, DialogAction::Repeat, false, UserEvent::BargeIn) == doctest::Approx(-0.67));
}

TEST_CASE("encode_state") {
  const Catalog c = default_catalog();
  CHECK(intent_id(c, "ood") == 1);
  CHECK(intent_id(c, "get_plot") == 2);
  CHECK(slot_id(c, "") == 1);
  CHECK(slot_id(c, "amelie") == 21);

  DialogState fresh{"get_cast", "jaws", 0.8, PrevAction::None, 0, 0};
  const Observation o = encode_state({fresh}, 1, c);
  CHECK(o.ids == std::vector<int>{intent_id(c, "get_cast"), slot_id(c, "jaws")});
  CHECK(o.numeric == std::vector<double>{0.8, 1, 0, 0, 0, 0, 0});

  DialogState later{"ood", "", 0.3, PrevAction::Repeat, 2, 1};
  const Observation w = encode_state({fresh, later}, 3, c);
  CHECK(w.ids == std::vector<int>{1, 1, intent_id(c, "get_cast"), slot_id(c, "jaws"), 0, 0});
  REQUIRE(w.numeric.size() == 21);
  CHECK(std::vector<double>(w.numeric.begin(), w.numeric.begin() + 7) == std::vector<double>{0.3, 0, 0, 0, 1, 2, 1});
  for (std::size_t k = 14; k < 21; ++k) CHECK(w.numeric[k] == 0.0);
  CHECK(encode_state({fresh, later}, 3, c).numeric == w.numeric);

  DialogEnv env(EnvConfig{}, clean_channel(), nullptr);
  QNetworkShape shape = shape_for(env, 1, 2, 8);
  CHECK(shape.input_dim() == 9);
}

TEST_CASE("noiseless channel") {
  DialogEnv env(EnvConfig{}, clean_channel(), nullptr);
  for (std::size_t i = 0; i < 300; ++i) {
    Rng rng(episode_seed(5, i));
    env.reset_episode(rng);
    CHECK(toy_nlu(env.hypothesis(), env.config().catalog) == NluResult{env.goal().intent, env.goal().slot, false});
    CHECK(env.hypothesis() == env.utterance());
    CHECK(env.state().score == 1.0);
    CHECK(env.hypothesis_correct());
  }
  CHECK(measure_reset_ser(env, 500, 1) == 0.0);
  const PolicyReport r = eval_policy(env, ExecuteOnlyPolicy(), 1000, 2);
  CHECK(r.success_rate == 1.0);
  CHECK(r.average_turns_to_execute == 1.0);
  CHECK(r.average_reward >= 1.0);
  CHECK(r.average_reward <= 1.0 + 0.17 * 0.1);
}

TEST_CASE("step semantics") {
  DialogEnv env(quiet(), clean_channel(), nullptr);
  Rng rng(3);
  env.reset_episode(rng);
  auto confirm = env.env_step(DialogAction::Confirm, rng);
  CHECK(confirm.reward == -0.33);
  CHECK_FALSE(confirm.done);
  CHECK(confirm.next_state.prev_action == PrevAction::Confirm);
  CHECK(confirm.next_state.request_clarifications == 1);
  auto exec = env.env_step(DialogAction::Execute, rng);
  CHECK(exec.reward == 1.0);
  CHECK(exec.done);
  CHECK(exec.correct);
  CHECK_THROWS_AS(env.env_step(DialogAction::Execute, rng), DomainError);

  // Clarifications beyond the cap turn into execute.
  env.reset_episode(rng);
  std::size_t turns = 0;
  StepOutcome last;
  while (!env.done()) {
    last = env.env_step(DialogAction::Repeat, rng);
    ++turns;
    CHECK(last.next_state.request_clarifications <= env.config().max_clarifications);
  }
  CHECK(turns == env.config().max_clarifications + 1);
  CHECK(last.taken == DialogAction::Execute);
}

TEST_CASE("seeded episodes repeat exactly") {
  DialogEnv a(EnvConfig{}, noisy_channel(), nullptr), b(EnvConfig{}, noisy_channel(), nullptr);
  const DialogAction plan[] = {DialogAction::Confirm, DialogAction::Repeat, DialogAction::Confirm,
                               DialogAction::Execute};
  for (std::size_t i = 0; i < 100; ++i) {
    Rng ra(episode_seed(9, i)), rb(episode_seed(9, i));
    a.reset_episode(ra);
    b.reset_episode(rb);
    CHECK(a.goal().intent == b.goal().intent);
    CHECK(a.goal().slot == b.goal().slot);
    CHECK(a.utterance() == b.utterance());
    for (auto act : plan) {
      if (a.done()) break;
      const auto oa = a.env_step(act, ra), ob = b.env_step(act, rb);
      CHECK(a.hypothesis() == b.hypothesis());
      CHECK(oa.next_state.score == ob.next_state.score);
      CHECK(oa.user_event == ob.user_event);
      CHECK(oa.reward == ob.reward);
    }
  }
}

TEST_CASE("rewards stay in range under random play") {
  DialogEnv env(EnvConfig{}, noisy_channel(), nullptr);
  Rng rng(44);
  std::size_t episodes = 0, events = 0;
  while (episodes < 2000) {
    env.reset_episode(rng);
    while (!env.done()) {
      const auto a = static_cast<DialogAction>(rng() % kDialogActions);
      const auto o = env.env_step(a, rng);
      CHECK(o.reward >= -1.17 - 1e-12);
      CHECK(o.reward <= 1.17 + 1e-12);
      events += o.user_event != UserEvent::None;
    }
    ++episodes;
  }
  CHECK(events > 0);
}

TEST_CASE("noisy channel: measured SER and execute-only success") {
  DialogEnv env(EnvConfig{}, noisy_channel(), nullptr);
  const std::size_t n = 2000;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(episode_seed(17, i));
    env.reset_episode(rng);
    const NluResult got = toy_nlu(env.hypothesis(), env.config().catalog);
    const bool ok = !got.ood && got.intent == env.goal().intent && got.slot == env.goal().slot;
    CHECK(ok == env.hypothesis_correct());
    wrong += !ok;
  }
  const double ser = measure_reset_ser(env, n, 17);
  CHECK(ser == static_cast<double>(wrong) / n);
  CHECK(ser > 0.1);

  const PolicyReport paired = eval_policy(env, ExecuteOnlyPolicy(), n, 17);
  CHECK(paired.success_rate == doctest::Approx(1.0 - ser).epsilon(1e-12));
  CHECK(paired.average_turns_to_execute == 1.0);
  const PolicyReport fresh = eval_policy(env, *execute_only_policy(), n, 18);
  CHECK(std::abs(fresh.success_rate - (1.0 - ser)) <= 0.03);
}

TEST_CASE("env config JSON") {
  nlohmann::json j = EnvConfig{};
  EnvConfig back = j.get<EnvConfig>();
  CHECK(nlohmann::json(back) == j);
  j["barge_in_prob"] = 1.5;
  CHECK_THROWS_AS(j.get<EnvConfig>(), ConfigError);
}
