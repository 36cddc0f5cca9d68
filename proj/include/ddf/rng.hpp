#pragma once

#include <cstdint>
#include <random>

namespace ddf {

// Seeded random stream with explicit uniform/Gaussian draws. std::mt19937_64
// is bit-specified by the standard; the distributions are not, so Box-Muller
// and the 53-bit uniform are done by hand to keep outputs identical across
// platforms and toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; caches the paired sample.
  double gaussian();

  // Derives an independent substream seed from (seed, tag) pairs.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ddf
