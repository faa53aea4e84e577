#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace swarmloc {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-mixed substream seed: each key is folded through splitmix64 so
// that (base, 1, 2) and (base, 2, 1) land on unrelated streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept;

}  // namespace swarmloc
