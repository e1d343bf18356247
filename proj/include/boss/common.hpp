#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace boss {

// Base class for every error raised by the library. Callers at the CLI layer
// print what() as a one-line diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent random streams per (master seed, trial, purpose). A trial's
// randomness never depends on dispatch order, so serial, parallel and resumed
// runs draw the same numbers for the same trial.
enum class Stream : std::uint64_t { suggest = 1, init = 2, shuffle = 3, select = 4, noise = 5 };

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial_id, Stream s) {
  return mix64(mix64(mix64(master) ^ trial_id) ^ static_cast<std::uint64_t>(s));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t trial_id, Stream s) {
  return Rng(derive_seed(master, trial_id, s));
}

}  // namespace boss
