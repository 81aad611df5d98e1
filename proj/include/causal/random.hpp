#pragma once

#include <cstdint>
#include <random>

namespace causal {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for (stream, index) under a master seed. Streams keep shuffling,
/// dropout, and initialization decorrelated from one another.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return mix64(master ^ mix64(stream * 0x100000001b3ULL + mix64(index)));
}

namespace seed_stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kDropout = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kHeadInit = 5;
}  // namespace seed_stream

}  // namespace causal
