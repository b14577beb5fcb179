#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "noisychannel/random.hpp"

namespace noisychannel {

// What an agent sees: categorical ids (looked up in embedding tables) and
// numeric features.
struct Observation {
  std::vector<int> ids;
  std::vector<double> numeric;
};

struct StepResult {
  Observation next;
  double reward = 0.0;
  bool done = false;
  bool success = false;  // meaningful when done
};

// Episodic environment with a discrete action set. All randomness comes from
// the stream passed in, so one stream per episode makes episodes repeatable.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t n_actions() const = 0;
  virtual std::size_t n_numeric() const = 0;
  // Embedding table index for each position of Observation::ids.
  virtual std::vector<std::size_t> id_tables() const = 0;
  // Number of rows of each embedding table.
  virtual std::vector<std::size_t> table_sizes() const = 0;

  virtual Observation reset(Rng& rng) = 0;
  virtual StepResult step(std::size_t action, Rng& rng) = 0;
};

// Seed of the i-th episode of an evaluation or measurement stream.
inline std::uint64_t episode_seed(std::uint64_t seed, std::size_t episode) {
  return child_seed(seed, "episode:" + std::to_string(episode));
}

}  // namespace noisychannel
