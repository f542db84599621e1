// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace textsense {

/// SplitMix64 step. Advances `state` and returns the next output word.
std::uint64_t splitmix64_next(std::uint64_t& state);

/// FNV-1a 64-bit hash of raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Derives an independent stream seed from a parent seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// Seeded generator with platform-independent distributions. The standard
/// library engines are fully specified but its distributions are not, so the
/// mappings to doubles live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace textsense
