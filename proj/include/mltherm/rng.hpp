#pragma once

#include <cstdint>
#include <random>

namespace mltherm {

/// Number of draws that share one random stream. Sampling and every Monte-Carlo
/// estimator lay their work out in batches of this size so that results depend
/// only on (seed, batch index) and never on thread scheduling.
inline constexpr std::size_t kBatchSize = 4096;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent engine for batch `batch` of a run seeded with `seed`.
inline std::mt19937_64 batch_stream(std::uint64_t seed, std::uint64_t batch) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(batch + 0x5851f42d4c957f2dULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace mltherm
