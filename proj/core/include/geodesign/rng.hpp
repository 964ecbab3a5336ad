#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace geodesign {

// All randomness flows through named streams derived from one master seed.
//
// Derivation: starting from the master seed, each path element is folded in
// with splitmix64's finalizer. The resulting 64-bit value seeds a
// std::mt19937_64. Two streams with different paths are independent for all
// practical purposes, and a stream depends only on (seed, path) — never on
// scheduling, worker count, or call order. That property is what makes every
// simulation here reproducible and embarrassingly parallel at the same time.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = seed;
  std::uint64_t out = splitmix64_next(state);
  for (std::uint64_t p : path) {
    state ^= p;
    out = splitmix64_next(state);
  }
  return out;
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(derive_seed(seed, path));
}

// Stream tags keep independent uses of the same master seed apart.
namespace stream {
inline constexpr std::uint64_t kReplicate = 0x7265706c69636174ULL;   // per-replicate draws
inline constexpr std::uint64_t kAssignment = 0x61737369676e6d74ULL;  // final assignment
inline constexpr std::uint64_t kSyntheticGeo = 0x73796e746867656fULL;
inline constexpr std::uint64_t kDesignEval = 0x6465736967726576ULL;   // per-n evaluation
inline constexpr std::uint64_t kStudyPanel = 0x737464792d70616eULL;   // per-panel-replicate
}  // namespace stream

}  // namespace geodesign
