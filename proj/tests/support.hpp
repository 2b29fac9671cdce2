#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "noisedit/latent.hpp"

namespace testing_support {

inline noisedit::LatentVolume random_volume(noisedit::Shape s, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(s.size());
  for (auto& x : v) x = n(gen);
  return noisedit::LatentVolume(s, std::move(v));
}

inline noisedit::EditMask random_mask(noisedit::PlaneShape s, std::uint64_t seed, double density = 0.5) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution b(density);
  std::vector<std::uint8_t> v(s.size());
  for (auto& x : v) x = b(gen) ? 1 : 0;
  return noisedit::EditMask(s, std::move(v));
}

}  // namespace testing_support
