#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace spectral {

/// Deterministic random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are not portable, so every derived
/// quantity (uniform reals, bounded integers, normals) is computed here from
/// raw 64-bit draws. Same seed gives the same stream on every platform; this
/// algorithm is part of the file-format contract and must not change.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection, no modulo bias.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  void shuffle(std::vector<std::size_t>& items);

  /// Independent seed for a sub-task (fold, worker). SplitMix64 finaliser
  /// over seed and stream id.
  static std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream);

  Rng child(std::uint64_t stream) const { return Rng(child_seed(seed_, stream)); }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spectral
