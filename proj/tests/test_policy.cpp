#include <doctest.h>

#include <filesystem>
#include <map>

#include "noisychannel/confusion.hpp"
#include "noisychannel/dialog_env.hpp"
#include "noisychannel/errors.hpp"
#include "noisychannel/policy.hpp"
#include "noisychannel/qnetwork.hpp"
#include "noisychannel/synth.hpp"
#include "support/toy_mdp.hpp"

using namespace noisychannel;

namespace {

QNetworkShape small_shape() {
  QNetworkShape s;
  s.table_sizes = {3, 4};
  s.id_tables = {0, 1, 0};
  s.embedding_size = 2;
  s.n_numeric = 3;
  s.hidden_layers = 2;
  s.hidden_nodes = 6;
  s.n_actions = 3;
  return s;
}

std::vector<Observation> random_batch(const QNetworkShape& s, std::size_t n, Rng& rng) {
  std::vector<Observation> out(n);
  for (auto& o : out) {
    for (auto t : s.id_tables) o.ids.push_back(static_cast<int>(rng() % s.table_sizes[t]));
    for (std::size_t k = 0; k < s.n_numeric; ++k) o.numeric.push_back(uniform01(rng) * 2 - 1);
  }
  return out;
}

std::vector<const Observation*> pointers(const std::vector<Observation>& v) {
  std::vector<const Observation*> p;
  for (const auto& o : v) p.push_back(&o);
  return p;
}

const ConfusionModel& channel() {
  static const ConfusionModel m = build_confusion(synth_corpus(SynthConfig{}, 61));
  return m;
}

}  // namespace

TEST_CASE("epsilon schedule") {
  const EpsilonSchedule e;
  CHECK(epsilon_at(e, 0) == 1.0);
  CHECK(epsilon_at(e, 50000) == doctest::Approx(0.55));
  CHECK(epsilon_at(e, 100000) == doctest::Approx(0.1));
  CHECK(epsilon_at(e, 200000) == doctest::Approx(0.1));
}

TEST_CASE("dueling aggregation has zero-mean advantage") {
  Rng rng(1);
  const QNetworkShape s = small_shape();
  QNetwork net(s, rng);
  const auto batch = random_batch(s, 16, rng);
  QNetwork::Cache cache;
  const Eigen::MatrixXd q = net.forward(pointers(batch), &cache);
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    const double mean_adv = (q.col(c).array() - cache.value(c)).mean();
    CHECK(std::abs(mean_adv) < 1e-6);
  }
  CHECK(net.q_values(batch[0]) == std::vector<double>(q.col(0).data(), q.col(0).data() + 3));
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(2);
  const QNetworkShape s = small_shape();
  QNetwork net(s, rng);
  for (auto& m : net.params())
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += 0.1 * (uniform01(rng) - 0.5);
  const auto batch = random_batch(s, 5, rng);
  Eigen::MatrixXd w(3, 5);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform01(rng) * 2 - 1;
  CHECK(toy::gradient_check(net, pointers(batch), w) < 1e-4);
}

TEST_CASE("dropout only when training") {
  Rng rng(3);
  const QNetworkShape s = small_shape();
  QNetwork net(s, rng);
  const auto batch = random_batch(s, 4, rng);
  const auto p = pointers(batch);
  CHECK(net.forward(p) == net.forward(p));
  Rng d1(5), d2(6);
  CHECK(net.forward(p, nullptr, &d1, 0.5) != net.forward(p, nullptr, &d2, 0.5));
  Rng d3(5);
  CHECK(net.forward(p, nullptr, &d3, 0.0) == net.forward(p));
}

TEST_CASE("double-Q target on a two-state MDP") {
  // s0 --(reward 0.5)--> s1; the online net prefers action 1 in s1, the
  // target net values action 0 higher.
  Rng rng(4);
  QNetworkShape s;
  s.n_numeric = 2;
  s.hidden_layers = 1;
  s.hidden_nodes = 4;
  s.n_actions = 2;
  QNetwork online(s, rng), target(s, rng);
  toy::program_heads(online, 1.5, {-0.5, 0.5});
  toy::program_heads(target, 4.0, {1.0, -1.0});
  Observation s1{{}, {0.0, 1.0}};
  const auto qo = online.q_values(s1), qt = target.q_values(s1);
  CHECK(qo == std::vector<double>{1.0, 2.0});
  CHECK(qt == std::vector<double>{5.0, 3.0});
  CHECK(argmax(qo) == 1);
  CHECK(double_q_target(0.5, false, 0.9, qo, qt) == doctest::Approx(0.5 + 0.9 * 3.0));
  CHECK(single_q_target(0.5, false, 0.9, qt) == doctest::Approx(0.5 + 0.9 * 5.0));
  CHECK(double_q_target(0.5, true, 0.9, qo, qt) == 0.5);
  CHECK(argmax(std::vector<double>{2.0, 2.0}) == 0);
}

TEST_CASE("replay buffer") {
  ReplayBuffer buf(10);
  for (int i = 0; i < 25; ++i) buf.push({{}, 0, static_cast<double>(i), {}, false});
  CHECK(buf.size() == 10);
  CHECK(buf[0].reward == 15.0);
  CHECK(buf[9].reward == 24.0);

  // 100k draws over ten slots: each count within 5% of 10,000.
  Rng rng(7);
  std::vector<std::size_t> counts(10, 0);
  for (int i = 0; i < 1000; ++i)
    for (auto k : buf.sample_indices(100, rng)) ++counts[k];
  for (auto c : counts) CHECK(std::abs(static_cast<double>(c) - 10000.0) <= 500.0);
}

TEST_CASE("recovers the value-iteration policy on a toy chain") {
  const double gamma = 0.9;
  const auto optimal = toy::value_iteration(gamma);
  CHECK(optimal == std::array<std::size_t, 4>{1, 0, 1, 0});
  toy::Chain env;
  PolicyConfig cfg;
  cfg.hidden_layers = 1;
  cfg.hidden_nodes = 16;
  cfg.dropout = 0.0;
  cfg.learning_rate = 1e-3;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.gamma = gamma;
  cfg.replay_size = 5000;
  cfg.target_update_interval = 200;
  cfg.epsilon = {1.0, 0.1, 2000};
  cfg.total_steps = 6000;
  cfg.eval_every = 3000;
  cfg.eval_episodes = 20;
  cfg.learn_start = 200;
  for (std::uint64_t seed : {1, 2, 3}) {
    const TrainedPolicy p = train_policy(env, cfg, seed);
    for (std::size_t s = 0; s < toy::Chain::kStates; ++s) CHECK(p.network.greedy_action(toy::Chain::observe(s)) == optimal[s]);
  }
}

TEST_CASE("noiseless dialog converges to immediate execution") {
  const ConfusionModel clean = adjust_self_frequency(channel(), 0.0);
  DialogEnv env(EnvConfig{}, clean, nullptr);
  PolicyConfig cfg;
  cfg.hidden_nodes = 32;
  cfg.learning_rate = 1e-3;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.total_steps = 3000;
  cfg.eval_every = 1500;
  cfg.learn_start = 200;
  cfg.target_update_interval = 300;
  cfg.epsilon = {1.0, 0.1, 1500};
  const TrainedPolicy p = train_policy(env, cfg, 5);
  const PolicyReport r = eval_policy(env, GreedyQPolicy(p.network), 500, 6);
  CHECK(std::abs(r.average_turns_to_execute - 1.0) <= 0.05);
  CHECK(r.success_rate == 1.0);
}

TEST_CASE("learning curve improves on the noisy dialog") {
  DialogEnv env(EnvConfig{}, channel(), nullptr);
  PolicyConfig cfg;
  cfg.total_steps = 12000;
  cfg.eval_every = 6000;
  cfg.eval_episodes = 300;
  cfg.target_update_interval = 3000;
  cfg.epsilon = {1.0, 0.1, 10000};
  for (std::uint64_t seed : {1, 2, 3}) {
    const TrainedPolicy p = train_policy(env, cfg, seed);
    REQUIRE(p.curve.size() == 3);
    CHECK(p.curve.front().step == 0);
    CHECK(p.curve.back().step == cfg.total_steps);
    CHECK(p.curve.back().report.success_rate >= p.curve.front().report.success_rate);
  }
}

TEST_CASE("training is deterministic and checkpoints round trip") {
  DialogEnv env(EnvConfig{}, channel(), nullptr);
  PolicyConfig cfg;
  cfg.hidden_nodes = 16;
  cfg.total_steps = 1500;
  cfg.eval_every = 500;
  cfg.eval_episodes = 30;
  cfg.learn_start = 100;
  cfg.target_update_interval = 400;
  const TrainedPolicy a = train_policy(env, cfg, 9), b = train_policy(env, cfg, 9);
  CHECK(nlohmann::json(a).dump() == nlohmann::json(b).dump());

  const auto path = std::filesystem::temp_directory_path() / "noisychannel_policy_test.json";
  save_policy(path, a);
  const TrainedPolicy back = load_policy(path);
  std::filesystem::remove(path);
  CHECK(nlohmann::json(back).dump() == nlohmann::json(a).dump());
  const auto ra = eval_policy(env, GreedyQPolicy(a.network), 200, 3);
  const auto rb = eval_policy(env, GreedyQPolicy(back.network), 200, 3);
  CHECK(ra.success_rate == rb.success_rate);
  CHECK(ra.average_reward == rb.average_reward);
}

TEST_CASE("policy config validation") {
  PolicyConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  nlohmann::json j = PolicyConfig{};
  CHECK(nlohmann::json(j.get<PolicyConfig>()) == j);
}
