#pragma once

#include <cstdint>

#include "mixprec/layer.hpp"
#include "mixprec/tensor.hpp"

namespace mixprec {
namespace gen {

/// SplitMix64: tiny, fully specified PRNG so generated artifacts are
/// identical for a seed on every platform (the std:: distributions are
/// implementation-defined).
struct SplitMix64 {
  std::uint64_t state = 0;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint32_t below(std::uint32_t bound) {
    return static_cast<std::uint32_t>(next() % bound);
  }

  /// Uniform int in [lo, hi].
  int range(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint32_t>(hi - lo + 1)));
  }
};

struct GeneratedLayer {
  PackedTensor input;
  WeightTensor weights;
  LayerQuant quant;
};

/// Seeded random layer instance: uniform codes over each precision's
/// range and dyadic quantization parameters scaled to the realized
/// accumulator range (so double arithmetic stays exact and the 8-bit
/// integer requant path always exists). Redraws until the reference
/// output holds at least two distinct codes; throws after 64 attempts.
GeneratedLayer generate_layer(const LayerConfig& cfg, std::uint64_t seed);

}  // namespace gen
}  // namespace mixprec
