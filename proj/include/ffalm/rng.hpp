#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ffalm {

// Hierarchical RNG: every consumer derives its own substream from the
// master seed and a purpose/coordinate path, so draws are independent
// of the order in which clients or repetitions execute.
namespace rng_tag {
inline constexpr std::uint64_t kModelInit = 1;
inline constexpr std::uint64_t kBatch = 2;
inline constexpr std::uint64_t kSynth = 3;
inline constexpr std::uint64_t kPartition = 4;
inline constexpr std::uint64_t kEvalSplit = 5;
inline constexpr std::uint64_t kRateNoise = 6;
}  // namespace rng_tag

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Substream engine for a (master seed, path) pair, e.g.
// substream(seed, {kBatch, round, client, step}).
inline std::mt19937_64 substream(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix64(master);
  for (std::uint64_t p : path) key = mix64(key ^ p);
  return std::mt19937_64(key);
}

}  // namespace ffalm
