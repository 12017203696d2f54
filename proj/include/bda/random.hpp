#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bda {

using Rng = std::mt19937_64;

// Substream derivation: the global seed is scrambled with SplitMix64, then each
// path component k is folded in as h = mix(h ^ mix(k + golden)). The resulting
// 64-bit value seeds an mt19937_64. Streams depend only on (seed, path), so
// work can be scheduled in any order without changing results.
//
// Path tags used across the pipeline:
//   {1, i}      imputation i
//   {2, i, c}   chain c of the fit on imputed dataset i
//   {3}         prior predictive simulation
//   {4}         posterior predictive simulation
namespace stream {
inline constexpr std::uint64_t impute = 1;
inline constexpr std::uint64_t fit = 2;
inline constexpr std::uint64_t prior = 3;
inline constexpr std::uint64_t ppc = 4;
}  // namespace stream

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : path) h = splitmix64(h ^ splitmix64(k + 0x9E3779B97F4A7C15ULL));
  return h;
}

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(seed, path));
}

}  // namespace bda
