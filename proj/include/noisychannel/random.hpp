#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace noisychannel {

using Rng = std::mt19937_64;

// Derives the seed of a named child stream. All randomness in a run flows
// from one root seed; each stage draws from its own child stream so stages
// can be re-run in isolation and still see the same numbers.
std::uint64_t child_seed(std::uint64_t seed, std::string_view name);

inline Rng child_stream(std::uint64_t seed, std::string_view name) {
  return Rng(child_seed(seed, name));
}

// Uniform real in [0, 1).
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace noisychannel
