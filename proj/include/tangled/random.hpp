#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tangled {

using Rng = std::mt19937_64;

/// Purpose tags for seed derivation. Every random stream in the library is
/// keyed by (master seed, tag, index...) so results never depend on the
/// order in which streams are consumed.
enum class Stream : std::uint64_t {
  kSplit = 1,
  kBootstrap = 2,
  kTree = 3,
  kEnsemble = 4,
  kRefine = 5,
  kPermutation = 6,
  kSynthetic = 7,
  kRepeat = 8,
  kDownstream = 9,
  kBaseline = 10,
  kAngle = 11,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream tag,
                                    std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  return splitmix64(h ^ index);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream tag,
                                    std::uint64_t index, std::uint64_t sub) {
  return splitmix64(derive_seed(seed, tag, index) ^ (sub + 0x632be59bd9b4e019ULL));
}

}  // namespace tangled
