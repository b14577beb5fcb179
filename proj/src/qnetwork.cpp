#include "noisychannel/qnetwork.hpp"

#include <cmath>

#include "noisychannel/errors.hpp"

namespace noisychannel {

QNetworkShape shape_for(const Environment& env, std::size_t embedding_size, std::size_t hidden_layers,
                        std::size_t hidden_nodes) {
  QNetworkShape s;
  s.table_sizes = env.table_sizes();
  s.id_tables = env.id_tables();
  s.embedding_size = embedding_size;
  s.n_numeric = env.n_numeric();
  s.hidden_layers = hidden_layers;
  s.hidden_nodes = hidden_nodes;
  s.n_actions = env.n_actions();
  return s;
}

namespace {

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double limit, Rng& rng) {
  std::uniform_real_distribution<double> u(-limit, limit);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
  return m;
}

}  // namespace

QNetwork::QNetwork(const QNetworkShape& shape, Rng& rng) : shape_(shape) {
  if (shape.n_actions == 0 || shape.hidden_nodes == 0 || shape.input_dim() == 0)
    throw ConfigError("q-network: actions, hidden nodes and input dimension must be positive");
  for (auto t : shape.id_tables) {
    if (t >= shape.table_sizes.size()) throw ConfigError("q-network: id position refers to a missing table");
  }
  const auto E = static_cast<Eigen::Index>(shape.embedding_size);
  for (auto rows : shape.table_sizes) params_.push_back(uniform_matrix(static_cast<Eigen::Index>(rows), E, 0.5, rng));
  auto fan_in = static_cast<Eigen::Index>(shape.input_dim());
  const auto H = static_cast<Eigen::Index>(shape.hidden_nodes);
  for (std::size_t l = 0; l < shape.hidden_layers; ++l) {
    params_.push_back(uniform_matrix(H, fan_in, std::sqrt(6.0 / static_cast<double>(fan_in)), rng));
    params_.push_back(Eigen::MatrixXd::Zero(H, 1));
    fan_in = H;
  }
  const auto A = static_cast<Eigen::Index>(shape.n_actions);
  params_.push_back(uniform_matrix(1, fan_in, std::sqrt(6.0 / static_cast<double>(fan_in + 1)), rng));
  params_.push_back(Eigen::MatrixXd::Zero(1, 1));
  params_.push_back(uniform_matrix(A, fan_in, std::sqrt(6.0 / static_cast<double>(fan_in + A)), rng));
  params_.push_back(Eigen::MatrixXd::Zero(A, 1));
}

Eigen::MatrixXd QNetwork::assemble_input(const std::vector<const Observation*>& batch) const {
  const auto E = static_cast<Eigen::Index>(shape_.embedding_size);
  const std::size_t n_ids = shape_.id_tables.size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(shape_.input_dim()), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Observation& o = *batch[i];
    if (o.ids.size() != n_ids || o.numeric.size() != shape_.n_numeric)
      throw DomainError("q-network: observation does not match the network's input shape");
    const auto col = static_cast<Eigen::Index>(i);
    for (std::size_t p = 0; p < n_ids; ++p) {
      const auto& table = params_[shape_.id_tables[p]];
      if (o.ids[p] < 0 || o.ids[p] >= table.rows()) throw DomainError("q-network: id out of embedding range");
      X.block(static_cast<Eigen::Index>(p) * E, col, E, 1) = table.row(o.ids[p]).transpose();
    }
    for (std::size_t k = 0; k < o.numeric.size(); ++k)
      X(static_cast<Eigen::Index>(n_ids) * E + static_cast<Eigen::Index>(k), col) = o.numeric[k];
  }
  return X;
}

Eigen::MatrixXd QNetwork::forward(const std::vector<const Observation*>& batch, Cache* cache, Rng* dropout_rng,
                                  double dropout) const {
  Eigen::MatrixXd h = assemble_input(batch);
  if (cache) {
    cache->batch = batch;
    cache->activations.assign(1, h);
    cache->masks.clear();
  }
  const bool drop = dropout_rng && dropout > 0.0;
  const double keep = 1.0 - dropout;
  for (std::size_t l = 0; l < shape_.hidden_layers; ++l) {
    const auto& W = params_[trunk_index(l)];
    const auto& b = params_[trunk_index(l) + 1];
    Eigen::MatrixXd z = W * h;
    z.colwise() += b.col(0);
    h = z.cwiseMax(0.0);
    Eigen::MatrixXd mask;
    if (drop) {
      mask.resize(h.rows(), h.cols());
      for (Eigen::Index c = 0; c < mask.cols(); ++c)
        for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = uniform01(*dropout_rng) < keep ? 1.0 / keep : 0.0;
      h = h.cwiseProduct(mask);
    }
    if (cache) {
      cache->activations.push_back(h);
      cache->masks.push_back(std::move(mask));
    }
  }
  Eigen::RowVectorXd value = params_[value_index()] * h;
  value.array() += params_[value_index() + 1](0, 0);
  Eigen::MatrixXd adv = params_[advantage_index()] * h;
  adv.colwise() += params_[advantage_index() + 1].col(0);
  Eigen::MatrixXd q = adv.rowwise() - adv.colwise().mean();
  q.rowwise() += value;
  if (cache) {
    cache->value = value;
    cache->advantage = adv;
    cache->q = q;
  }
  return q;
}

std::vector<double> QNetwork::q_values(const Observation& obs) const {
  const Eigen::MatrixXd q = forward({&obs});
  return {q.data(), q.data() + q.size()};
}

std::size_t QNetwork::greedy_action(const Observation& obs) const { return argmax(q_values(obs)); }

QNetwork::Params QNetwork::backward(const Cache& cache, const Eigen::MatrixXd& dq) const {
  Params grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) grads.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));

  const Eigen::RowVectorXd d_value = dq.colwise().sum();
  const Eigen::MatrixXd d_adv = dq.rowwise() - dq.colwise().mean();
  const Eigen::MatrixXd& top = cache.activations.back();
  grads[value_index()] = d_value * top.transpose();
  grads[value_index() + 1](0, 0) = d_value.sum();
  grads[advantage_index()] = d_adv * top.transpose();
  grads[advantage_index() + 1] = d_adv.rowwise().sum();

  Eigen::MatrixXd dh = params_[value_index()].transpose() * d_value + params_[advantage_index()].transpose() * d_adv;
  for (std::size_t l = shape_.hidden_layers; l-- > 0;) {
    const Eigen::MatrixXd& out = cache.activations[l + 1];
    Eigen::MatrixXd dz = dh.cwiseProduct((out.array() > 0.0).cast<double>().matrix());
    if (cache.masks[l].size() > 0) dz = dz.cwiseProduct(cache.masks[l]);
    grads[trunk_index(l)] = dz * cache.activations[l].transpose();
    grads[trunk_index(l) + 1] = dz.rowwise().sum();
    dh = params_[trunk_index(l)].transpose() * dz;
  }

  const auto E = static_cast<Eigen::Index>(shape_.embedding_size);
  for (std::size_t i = 0; i < cache.batch.size(); ++i) {
    const Observation& o = *cache.batch[i];
    for (std::size_t p = 0; p < o.ids.size(); ++p) {
      grads[shape_.id_tables[p]].row(o.ids[p]) +=
          dh.block(static_cast<Eigen::Index>(p) * E, static_cast<Eigen::Index>(i), E, 1).transpose();
    }
  }
  return grads;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw DomainError("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double double_q_target(double reward, bool done, double gamma, std::span<const double> q_online_next,
                       std::span<const double> q_target_next) {
  if (done) return reward;
  if (q_online_next.size() != q_target_next.size()) throw DomainError("double_q_target: action count mismatch");
  return reward + gamma * q_target_next[argmax(q_online_next)];
}

double single_q_target(double reward, bool done, double gamma, std::span<const double> q_target_next) {
  if (done) return reward;
  return reward + gamma * q_target_next[argmax(q_target_next)];
}

void Optimizer::step(QNetwork::Params& params, const QNetwork::Params& grads) {
  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grads[i];
    return;
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
    params[i].array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
  }
}

void to_json(nlohmann::json& j, const QNetworkShape& s) {
  j = nlohmann::json{{"table_sizes", s.table_sizes}, {"id_tables", s.id_tables},
                     {"embedding_size", s.embedding_size}, {"n_numeric", s.n_numeric},
                     {"hidden_layers", s.hidden_layers}, {"hidden_nodes", s.hidden_nodes},
                     {"n_actions", s.n_actions}};
}

void from_json(const nlohmann::json& j, QNetworkShape& s) {
  s.table_sizes = j.at("table_sizes").get<std::vector<std::size_t>>();
  s.id_tables = j.at("id_tables").get<std::vector<std::size_t>>();
  s.embedding_size = j.at("embedding_size").get<std::size_t>();
  s.n_numeric = j.at("n_numeric").get<std::size_t>();
  s.hidden_layers = j.at("hidden_layers").get<std::size_t>();
  s.hidden_nodes = j.at("hidden_nodes").get<std::size_t>();
  s.n_actions = j.at("n_actions").get<std::size_t>();
}

void to_json(nlohmann::json& j, const QNetwork& net) {
  auto params = nlohmann::json::array();
  for (const auto& p : net.params()) {
    params.push_back({{"rows", p.rows()}, {"cols", p.cols()}, {"data", std::vector<double>(p.data(), p.data() + p.size())}});
  }
  j = nlohmann::json{{"shape", net.shape()}, {"params", std::move(params)}};
}

void from_json(const nlohmann::json& j, QNetwork& net) {
  net.shape_ = j.at("shape").get<QNetworkShape>();
  Rng scratch(0);
  const QNetwork reference(net.shape_, scratch);
  const auto& params = j.at("params");
  if (params.size() != reference.params().size()) throw ConfigError("q-network: wrong number of parameter blocks");
  net.params_.clear();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto rows = params[i].at("rows").get<Eigen::Index>();
    const auto cols = params[i].at("cols").get<Eigen::Index>();
    const auto data = params[i].at("data").get<std::vector<double>>();
    const auto& ref = reference.params()[i];
    if (rows != ref.rows() || cols != ref.cols() || static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw ConfigError("q-network: parameter block " + std::to_string(i) + " has the wrong shape");
    net.params_.push_back(Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols));
  }
}

}  // namespace noisychannel
