#pragma once
// Small environments with known optimal behavior for checking the Q-learner.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "noisychannel/environment.hpp"
#include "noisychannel/qnetwork.hpp"

namespace toy {

// Four-state chain. Action 0 moves right (reward 0), or at the last state
// ends the episode with reward 1. Action 1 ends the episode with a
// state-dependent payout. Episodes start in a uniform random state.
class Chain : public noisychannel::Environment {
 public:
  static constexpr std::size_t kStates = 4;
  static constexpr std::array<double, kStates> kExit{0.9, 0.2, 1.0, 0.5};

  std::size_t n_actions() const override { return 2; }
  std::size_t n_numeric() const override { return kStates; }
  std::vector<std::size_t> id_tables() const override { return {}; }
  std::vector<std::size_t> table_sizes() const override { return {}; }

  noisychannel::Observation reset(noisychannel::Rng& rng) override {
    state_ = std::uniform_int_distribution<std::size_t>(0, kStates - 1)(rng);
    return observe(state_);
  }
  noisychannel::StepResult step(std::size_t action, noisychannel::Rng&) override {
    if (action == 1) return {observe(state_), kExit[state_], true, true};
    if (state_ + 1 == kStates) return {observe(state_), 1.0, true, true};
    ++state_;
    return {observe(state_), 0.0, false, false};
  }
  static noisychannel::Observation observe(std::size_t s) {
    noisychannel::Observation o;
    o.numeric.assign(kStates, 0.0);
    o.numeric[s] = 1.0;
    return o;
  }

 private:
  std::size_t state_ = 0;
};

// Optimal action per state by value iteration.
inline std::array<std::size_t, Chain::kStates> value_iteration(double gamma) {
  std::array<double, Chain::kStates> v{};
  auto q = [&](std::size_t s, std::size_t a) {
    if (a == 1) return Chain::kExit[s];
    return s + 1 == Chain::kStates ? 1.0 : gamma * v[s + 1];
  };
  for (int it = 0; it < 1000; ++it)
    for (std::size_t s = 0; s < Chain::kStates; ++s) v[s] = std::max(q(s, 0), q(s, 1));
  std::array<std::size_t, Chain::kStates> best{};
  for (std::size_t s = 0; s < Chain::kStates; ++s) best[s] = q(s, 1) > q(s, 0) ? 1 : 0;
  return best;
}

// Sets a network's output to the constant Q-vector value + advantage -
// mean(advantage) by zeroing all weights and programming the head biases.
inline void program_heads(noisychannel::QNetwork& net, double value, const std::vector<double>& advantage) {
  auto& p = net.params();
  for (auto& m : p) m.setZero();
  const std::size_t a_bias = p.size() - 1, v_bias = p.size() - 3;
  p[v_bias](0, 0) = value;
  for (std::size_t k = 0; k < advantage.size(); ++k) p[a_bias](static_cast<Eigen::Index>(k), 0) = advantage[k];
}

// Largest relative error between the analytic gradient of
// L = sum(weights .* Q(batch)) and central finite differences.
inline double gradient_check(noisychannel::QNetwork& net, const std::vector<const noisychannel::Observation*>& batch,
                             const Eigen::MatrixXd& weights, double h = 1e-6) {
  noisychannel::QNetwork::Cache cache;
  net.forward(batch, &cache);
  const auto grads = net.backward(cache, weights);
  auto loss = [&] { return (net.forward(batch).array() * weights.array()).sum(); };
  double worst = 0.0;
  for (std::size_t k = 0; k < net.params().size(); ++k) {
    auto& m = net.params()[k];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double keep = m.data()[i];
      m.data()[i] = keep + h;
      const double up = loss();
      m.data()[i] = keep - h;
      const double down = loss();
      m.data()[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[k].data()[i];
      const double scale = std::abs(numeric) + std::abs(analytic);
      if (scale > 1e-7) worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  }
  return worst;
}

}  // namespace toy
