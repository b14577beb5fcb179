#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <vector>

#include <json.hpp>

#include "noisychannel/environment.hpp"
#include "noisychannel/qnetwork.hpp"

namespace noisychannel {

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.1;
  std::size_t decay_steps = 100000;
};

// Linear from start to end over decay_steps, then constant.
double epsilon_at(const EpsilonSchedule& schedule, std::size_t step);

enum class TdLoss { Squared, Huber };

struct PolicyConfig {
  std::size_t hidden_layers = 2;
  std::size_t hidden_nodes = 128;
  double learning_rate = 1e-4;
  double dropout = 0.5;
  std::size_t replay_size = 15000;
  std::size_t embedding_size = 20;
  std::size_t target_update_interval = 9000;
  double gamma = 0.97;
  EpsilonSchedule epsilon;
  std::size_t total_steps = 30000;
  std::size_t eval_every = 2000;
  std::size_t eval_episodes = 100;
  std::size_t batch_size = 32;
  std::size_t learn_start = 1000;  // transitions collected before the first update
  OptimizerKind optimizer = OptimizerKind::Sgd;
  TdLoss loss = TdLoss::Squared;

  // Throws ConfigError on non-positive sizes, rates outside their ranges or
  // epsilon start < end.
  void validate() const;
};

struct Transition {
  Observation state;
  std::size_t action = 0;
  double reward = 0.0;
  Observation next;
  bool done = false;
};

// Fixed-capacity FIFO of transitions with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  const Transition& operator[](std::size_t i) const { return items_[i]; }

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::size_t act(const Observation& obs) const = 0;
};

class GreedyQPolicy : public Policy {
 public:
  explicit GreedyQPolicy(const QNetwork& net) : net_(net) {}
  std::size_t act(const Observation& obs) const override { return net_.greedy_action(obs); }

 private:
  const QNetwork& net_;
};

// Always picks action 0 (execute in the dialog environment).
class ExecuteOnlyPolicy : public Policy {
 public:
  std::size_t act(const Observation&) const override { return 0; }
};

std::unique_ptr<Policy> execute_only_policy();

struct PolicyReport {
  std::size_t episodes = 0;
  double average_reward = 0.0;
  double average_turns_to_execute = 0.0;
  double success_rate = 0.0;
};

// Runs n greedy episodes; episode i draws from episode_seed(seed, i), so two
// policies evaluated with one seed face the same users. Episodes longer than
// max_turns throw DomainError.
PolicyReport eval_policy(Environment& env, const Policy& policy, std::size_t n_episodes, std::uint64_t seed,
                         std::size_t max_turns = 1000);

struct EvalPoint {
  std::size_t step = 0;
  PolicyReport report;
};

struct TrainedPolicy {
  PolicyConfig config;
  QNetwork network;
  std::size_t steps = 0;
  std::vector<EvalPoint> curve;  // greedy evaluations at step 0 and every eval_every steps
};

// Dueling double-DQN with uniform replay and a periodically copied target
// network. Evaluation runs on the same environment, so the training episode
// in progress is abandoned and a new one started afterwards.
TrainedPolicy train_policy(Environment& env, const PolicyConfig& cfg, std::uint64_t seed);

void to_json(nlohmann::json& j, const EpsilonSchedule& e);
void from_json(const nlohmann::json& j, EpsilonSchedule& e);
void to_json(nlohmann::json& j, const PolicyConfig& c);
void from_json(const nlohmann::json& j, PolicyConfig& c);
void to_json(nlohmann::json& j, const PolicyReport& r);
void to_json(nlohmann::json& j, const TrainedPolicy& p);
void from_json(const nlohmann::json& j, TrainedPolicy& p);

void save_policy(const std::filesystem::path& path, const TrainedPolicy& policy);
TrainedPolicy load_policy(const std::filesystem::path& path);

}  // namespace noisychannel
