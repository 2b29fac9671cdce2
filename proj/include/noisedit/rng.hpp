#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "noisedit/latent.hpp"

namespace noisedit {

/// Counter-based generator: every draw is a pure function of (key, counter),
/// so element k of a noise volume does not depend on how the volume is
/// traversed. Streams are split off by name or index.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc908ULL)) {}

  CounterRng stream(std::string_view name) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : name) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    return CounterRng(key_, h);
  }

  CounterRng stream(std::uint64_t index) const { return CounterRng(key_, mix(index + 0x9e3779b97f4a7c15ULL)); }

  std::uint64_t bits(std::uint64_t counter) const { return mix(key_ ^ mix(counter * 0x9e3779b97f4a7c15ULL + 1)); }

  /// Uniform in [0, 1).
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on counters (2k, 2k+1).
  double gaussian(std::uint64_t counter) const {
    const double u1 = 1.0 - uniform(2 * counter);  // (0, 1]
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  LatentVolume gaussian_volume(const Shape& shape) const {
    LatentVolume v(shape);
    for (std::size_t e = 0; e < v.size(); ++e) v[e] = gaussian(e);
    return v;
  }

 private:
  CounterRng(std::uint64_t parent, std::uint64_t salt) : key_(mix(parent + mix(salt))) {}

  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace noisedit
