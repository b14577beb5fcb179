#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "noisychannel/environment.hpp"
#include "noisychannel/random.hpp"

namespace noisychannel {

struct QNetworkShape {
  std::vector<std::size_t> table_sizes;  // rows of each embedding table
  std::vector<std::size_t> id_tables;    // table used by each id position
  std::size_t embedding_size = 20;
  std::size_t n_numeric = 0;
  std::size_t hidden_layers = 2;
  std::size_t hidden_nodes = 128;
  std::size_t n_actions = 3;

  std::size_t input_dim() const { return id_tables.size() * embedding_size + n_numeric; }
};

QNetworkShape shape_for(const Environment& env, std::size_t embedding_size, std::size_t hidden_layers,
                        std::size_t hidden_nodes);

// Dueling Q-network: embedded ids and numeric features feed a ReLU MLP
// trunk, which splits into a state value V and action advantages A;
// Q(s,a) = V(s) + A(s,a) - mean_a A(s,a).
class QNetwork {
 public:
  using Params = std::vector<Eigen::MatrixXd>;

  // Intermediate values of one batched forward pass, kept for backward.
  struct Cache {
    std::vector<const Observation*> batch;
    std::vector<Eigen::MatrixXd> activations;  // [input, hidden_1, ..., hidden_L], column per sample
    std::vector<Eigen::MatrixXd> masks;        // scaled dropout masks (empty when off)
    Eigen::RowVectorXd value;
    Eigen::MatrixXd advantage;                 // n_actions x batch
    Eigen::MatrixXd q;                         // n_actions x batch
  };

  QNetwork() = default;
  QNetwork(const QNetworkShape& shape, Rng& rng);

  const QNetworkShape& shape() const { return shape_; }

  // Dropout with rate `dropout` is applied to hidden activations when
  // dropout_rng is given (training); none otherwise.
  Eigen::MatrixXd forward(const std::vector<const Observation*>& batch, Cache* cache = nullptr,
                          Rng* dropout_rng = nullptr, double dropout = 0.0) const;
  std::vector<double> q_values(const Observation& obs) const;
  std::size_t greedy_action(const Observation& obs) const;

  // Gradient of a loss with dL/dQ = dq (n_actions x batch), same layout as params().
  Params backward(const Cache& cache, const Eigen::MatrixXd& dq) const;

  // Layout: embedding tables, then (weight, bias) for each trunk layer, then
  // value head (weight, bias) and advantage head (weight, bias).
  Params& params() { return params_; }
  const Params& params() const { return params_; }

 private:
  Eigen::MatrixXd assemble_input(const std::vector<const Observation*>& batch) const;
  std::size_t trunk_index(std::size_t layer) const { return shape_.table_sizes.size() + 2 * layer; }
  std::size_t value_index() const { return trunk_index(shape_.hidden_layers); }
  std::size_t advantage_index() const { return value_index() + 2; }

  QNetworkShape shape_;
  Params params_;

  friend void from_json(const nlohmann::json& j, QNetwork& net);
};

// Argmax with ties to the lowest index.
std::size_t argmax(std::span<const double> values);

// r + gamma * Q_target(s', argmax_a Q_online(s', a)); just r when done.
double double_q_target(double reward, bool done, double gamma, std::span<const double> q_online_next,
                       std::span<const double> q_target_next);
// r + gamma * max_a Q_target(s', a); the classic target, for comparison.
double single_q_target(double reward, bool done, double gamma, std::span<const double> q_target_next);

enum class OptimizerKind { Sgd, Adam };

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {}
  void step(QNetwork::Params& params, const QNetwork::Params& grads);

 private:
  OptimizerKind kind_;
  double lr_;
  std::size_t t_ = 0;
  QNetwork::Params m_, v_;
};

void to_json(nlohmann::json& j, const QNetworkShape& s);
void from_json(const nlohmann::json& j, QNetworkShape& s);
void to_json(nlohmann::json& j, const QNetwork& net);
void from_json(const nlohmann::json& j, QNetwork& net);

}  // namespace noisychannel
