#include "noisychannel/policy.hpp"

#include <algorithm>
#include <fstream>

#include "noisychannel/errors.hpp"

namespace noisychannel {

namespace {

constexpr const char* kFormat = "noisychannel.policy";
constexpr int kVersion = 1;

const char* to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }
const char* to_string(TdLoss l) { return l == TdLoss::Squared ? "squared" : "huber"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

TdLoss parse_loss(const std::string& s) {
  if (s == "squared") return TdLoss::Squared;
  if (s == "huber") return TdLoss::Huber;
  throw ConfigError("unknown loss '" + s + "' (expected squared or huber)");
}

}  // namespace

double epsilon_at(const EpsilonSchedule& schedule, std::size_t step) {
  if (schedule.decay_steps == 0 || step >= schedule.decay_steps) return schedule.end;
  const double frac = static_cast<double>(step) / static_cast<double>(schedule.decay_steps);
  return schedule.start + frac * (schedule.end - schedule.start);
}

void PolicyConfig::validate() const {
  if (hidden_layers == 0 || hidden_nodes == 0 || replay_size == 0 || embedding_size == 0 ||
      target_update_interval == 0 || total_steps == 0 || eval_every == 0 || eval_episodes == 0 || batch_size == 0)
    throw ConfigError("policy config: sizes, intervals and step counts must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("policy config: learning_rate must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("policy config: dropout must lie in [0,1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("policy config: gamma must lie in (0,1]");
  if (!(epsilon.start >= 0.0 && epsilon.end >= 0.0 && epsilon.start <= 1.0 && epsilon.end <= 1.0))
    throw ConfigError("policy config: epsilon values must lie in [0,1]");
  if (epsilon.start < epsilon.end) throw ConfigError("policy config: epsilon start must be >= end");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw DomainError("replay buffer: cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(rng);
  return out;
}

std::unique_ptr<Policy> execute_only_policy() { return std::make_unique<ExecuteOnlyPolicy>(); }

PolicyReport eval_policy(Environment& env, const Policy& policy, std::size_t n_episodes, std::uint64_t seed,
                         std::size_t max_turns) {
  if (n_episodes == 0) throw DomainError("eval_policy: need at least one episode");
  PolicyReport report;
  report.episodes = n_episodes;
  double reward = 0.0, turns = 0.0, successes = 0.0;
  for (std::size_t e = 0; e < n_episodes; ++e) {
    Rng rng(episode_seed(seed, e));
    Observation obs = env.reset(rng);
    for (std::size_t t = 1;; ++t) {
      if (t > max_turns) throw DomainError("eval_policy: episode exceeded " + std::to_string(max_turns) + " turns");
      const StepResult r = env.step(policy.act(obs), rng);
      reward += r.reward;
      if (r.done) {
        turns += static_cast<double>(t);
        successes += r.success ? 1.0 : 0.0;
        break;
      }
      obs = r.next;
    }
  }
  const auto n = static_cast<double>(n_episodes);
  report.average_reward = reward / n;
  report.average_turns_to_execute = turns / n;
  report.success_rate = successes / n;
  return report;
}

TrainedPolicy train_policy(Environment& env, const PolicyConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng init_rng = child_stream(seed, "policy.init");
  Rng env_rng = child_stream(seed, "policy.env");
  Rng agent_rng = child_stream(seed, "policy.agent");
  const std::uint64_t eval_seed = child_seed(seed, "policy.eval");

  TrainedPolicy out;
  out.config = cfg;
  out.network = QNetwork(shape_for(env, cfg.embedding_size, cfg.hidden_layers, cfg.hidden_nodes), init_rng);
  QNetwork target = out.network;
  Optimizer optimizer(cfg.optimizer, cfg.learning_rate);
  ReplayBuffer replay(cfg.replay_size);
  const std::size_t n_actions = env.n_actions();
  std::uniform_int_distribution<std::size_t> random_action(0, n_actions - 1);

  auto evaluate = [&](std::size_t step) {
    out.curve.push_back({step, eval_policy(env, GreedyQPolicy(out.network), cfg.eval_episodes, eval_seed)});
  };

  evaluate(0);
  Observation obs = env.reset(env_rng);
  const std::size_t warmup = std::max(cfg.learn_start, cfg.batch_size);
  const auto B = static_cast<Eigen::Index>(cfg.batch_size);
  std::vector<const Observation*> states(cfg.batch_size), nexts(cfg.batch_size);
  QNetwork::Cache cache;

  for (std::size_t step = 0; step < cfg.total_steps; ++step) {
    const std::size_t action = uniform01(agent_rng) < epsilon_at(cfg.epsilon, step)
                                   ? random_action(agent_rng)
                                   : out.network.greedy_action(obs);
    StepResult r = env.step(action, env_rng);
    Observation following = r.done ? env.reset(env_rng) : r.next;
    replay.push({std::move(obs), action, r.reward, std::move(r.next), r.done});
    obs = std::move(following);

    if (replay.size() >= warmup) {
      const auto idx = replay.sample_indices(cfg.batch_size, agent_rng);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        states[i] = &replay[idx[i]].state;
        nexts[i] = &replay[idx[i]].next;
      }
      const Eigen::MatrixXd q_online_next = out.network.forward(nexts);
      const Eigen::MatrixXd q_target_next = target.forward(nexts);
      const Eigen::MatrixXd q = out.network.forward(states, &cache, &agent_rng, cfg.dropout);
      Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), q.cols());
      for (Eigen::Index i = 0; i < B; ++i) {
        const Transition& t = replay[idx[static_cast<std::size_t>(i)]];
        const double y = double_q_target(
            t.reward, t.done, cfg.gamma,
            std::span<const double>(q_online_next.col(i).data(), n_actions),
            std::span<const double>(q_target_next.col(i).data(), n_actions));
        double err = q(static_cast<Eigen::Index>(t.action), i) - y;
        if (cfg.loss == TdLoss::Huber) err = std::clamp(err, -1.0, 1.0);
        dq(static_cast<Eigen::Index>(t.action), i) = err / static_cast<double>(B);
      }
      optimizer.step(out.network.params(), out.network.backward(cache, dq));
    }

    if ((step + 1) % cfg.target_update_interval == 0) target = out.network;
    if ((step + 1) % cfg.eval_every == 0) {
      evaluate(step + 1);
      obs = env.reset(env_rng);
    }
  }
  out.steps = cfg.total_steps;
  return out;
}

void to_json(nlohmann::json& j, const EpsilonSchedule& e) {
  j = nlohmann::json{{"start", e.start}, {"end", e.end}, {"decay_steps", e.decay_steps}};
}

void from_json(const nlohmann::json& j, EpsilonSchedule& e) {
  EpsilonSchedule d;
  e.start = j.value("start", d.start);
  e.end = j.value("end", d.end);
  e.decay_steps = j.value("decay_steps", d.decay_steps);
}

void to_json(nlohmann::json& j, const PolicyConfig& c) {
  j = nlohmann::json{{"hidden_layers", c.hidden_layers},
                     {"hidden_nodes", c.hidden_nodes},
                     {"learning_rate", c.learning_rate},
                     {"dropout", c.dropout},
                     {"replay_size", c.replay_size},
                     {"embedding_size", c.embedding_size},
                     {"target_update_interval", c.target_update_interval},
                     {"gamma", c.gamma},
                     {"epsilon", c.epsilon},
                     {"total_steps", c.total_steps},
                     {"eval_every", c.eval_every},
                     {"eval_episodes", c.eval_episodes},
                     {"batch_size", c.batch_size},
                     {"learn_start", c.learn_start},
                     {"optimizer", to_string(c.optimizer)},
                     {"loss", to_string(c.loss)}};
}

void from_json(const nlohmann::json& j, PolicyConfig& c) {
  try {
    PolicyConfig d;
    c.hidden_layers = j.value("hidden_layers", d.hidden_layers);
    c.hidden_nodes = j.value("hidden_nodes", d.hidden_nodes);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.dropout = j.value("dropout", d.dropout);
    c.replay_size = j.value("replay_size", d.replay_size);
    c.embedding_size = j.value("embedding_size", d.embedding_size);
    c.target_update_interval = j.value("target_update_interval", d.target_update_interval);
    c.gamma = j.value("gamma", d.gamma);
    c.epsilon = j.contains("epsilon") ? j.at("epsilon").get<EpsilonSchedule>() : d.epsilon;
    c.total_steps = j.value("total_steps", d.total_steps);
    c.eval_every = j.value("eval_every", d.eval_every);
    c.eval_episodes = j.value("eval_episodes", d.eval_episodes);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.learn_start = j.value("learn_start", d.learn_start);
    c.optimizer = parse_optimizer(j.value("optimizer", std::string(to_string(d.optimizer))));
    c.loss = parse_loss(j.value("loss", std::string(to_string(d.loss))));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("policy config: ") + e.what());
  }
  c.validate();
}

void to_json(nlohmann::json& j, const PolicyReport& r) {
  j = nlohmann::json{{"episodes", r.episodes},
                     {"average_reward", r.average_reward},
                     {"average_turns_to_execute", r.average_turns_to_execute},
                     {"success_rate", r.success_rate}};
}

void to_json(nlohmann::json& j, const TrainedPolicy& p) {
  auto curve = nlohmann::json::array();
  for (const auto& pt : p.curve) curve.push_back({{"step", pt.step}, {"report", pt.report}});
  j = nlohmann::json{{"format", kFormat},   {"version", kVersion},      {"config", p.config},
                     {"steps", p.steps},    {"network", p.network},     {"curve", std::move(curve)}};
}

void from_json(const nlohmann::json& j, TrainedPolicy& p) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ConfigError("not a policy checkpoint");
    if (j.at("version").get<int>() != kVersion) throw ConfigError("unsupported policy checkpoint version");
    p = TrainedPolicy{};
    p.config = j.at("config").get<PolicyConfig>();
    p.steps = j.at("steps").get<std::size_t>();
    p.network = j.at("network").get<QNetwork>();
    for (const auto& pt : j.at("curve")) {
      EvalPoint e;
      e.step = pt.at("step").get<std::size_t>();
      const auto& r = pt.at("report");
      e.report.episodes = r.at("episodes").get<std::size_t>();
      e.report.average_reward = r.at("average_reward").get<double>();
      e.report.average_turns_to_execute = r.at("average_turns_to_execute").get<double>();
      e.report.success_rate = r.at("success_rate").get<double>();
      p.curve.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("policy checkpoint: ") + e.what());
  }
}

void save_policy(const std::filesystem::path& path, const TrainedPolicy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << nlohmann::json(policy).dump() << '\n';
}

TrainedPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j.get<TrainedPolicy>();
}

}  // namespace noisychannel
