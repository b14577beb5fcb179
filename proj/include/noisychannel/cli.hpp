#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace noisychannel {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 1234;

// Seed used when --seed is absent: NOISY_CHANNEL_SEED if set, else
// kDefaultSeed. Throws ConfigError when the variable is not an unsigned
// integer.
std::uint64_t default_seed();

// Entry point of the command-line tool. Returns 0 on success, 2 on usage
// errors (usage text goes to `err`) and 1 on validation or domain errors
// (a one-line diagnostic goes to `err`).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace noisychannel
