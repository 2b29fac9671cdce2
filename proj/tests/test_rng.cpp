#include <gtest/gtest.h>

#include <cmath>

#include "noisedit/rng.hpp"

using namespace noisedit;

TEST(CounterRng, SameSeedSameDraws) {
  const CounterRng a(17), b(17);
  for (std::uint64_t i = 0; i < 100; ++i) EXPECT_EQ(a.bits(i), b.bits(i));
  EXPECT_EQ(a.stream("x").gaussian_volume(Shape{1, 2, 3, 4}), b.stream("x").gaussian_volume(Shape{1, 2, 3, 4}));
}

TEST(CounterRng, StreamsAndSeedsDiffer) {
  const CounterRng a(17);
  EXPECT_NE(a.bits(0), CounterRng(18).bits(0));
  EXPECT_NE(a.stream("x").bits(0), a.stream("y").bits(0));
  EXPECT_NE(a.stream(0).bits(0), a.stream(1).bits(0));
}

TEST(CounterRng, DrawOrderDoesNotMatter) {
  const CounterRng r(3);
  const double later = r.gaussian(500);
  for (std::uint64_t i = 0; i < 500; ++i) r.gaussian(i);
  EXPECT_EQ(r.gaussian(500), later);
}

TEST(CounterRng, UniformMoments) {
  const CounterRng r(99);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform(i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 4 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12.0, 2e-3);
}

TEST(CounterRng, GaussianMoments) {
  const CounterRng r(123);
  const int n = 200000;
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = r.gaussian(i);
    s += g;
    s2 += g * g;
    s4 += g * g * g * g;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
}
