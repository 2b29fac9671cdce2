#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <limits>

#include "noisedit/maskops.hpp"
#include "support.hpp"

using namespace noisedit;
using testing_support::random_mask;

namespace {

// All-pairs minimum over mask pixels, per frame.
std::vector<double> brute_force_distance(const EditMask& m) {
  const PlaneShape& s = m.shape();
  std::vector<double> out(s.size(), std::numeric_limits<double>::infinity());
  for (std::size_t f = 0; f < s.frames; ++f)
    for (std::size_t y = 0; y < s.height; ++y)
      for (std::size_t x = 0; x < s.width; ++x)
        for (std::size_t qy = 0; qy < s.height; ++qy)
          for (std::size_t qx = 0; qx < s.width; ++qx) {
            if (!m.at(f, qy, qx)) continue;
            const double dy = double(y) - double(qy), dx = double(x) - double(qx);
            double& d = out[(f * s.height + y) * s.width + x];
            d = std::min(d, std::sqrt(dy * dy + dx * dx));
          }
  return out;
}

void expect_matches_brute_force(const EditMask& m) {
  const auto fast = distance_transform(m);
  const auto slow = brute_force_distance(m);
  for (std::size_t i = 0; i < slow.size(); ++i) {
    if (std::isinf(slow[i])) {
      ASSERT_TRUE(std::isinf(fast.values()[i]));
    } else {
      ASSERT_NEAR(fast.values()[i], slow[i], 1e-9) << "pixel " << i;
    }
  }
}

EditMask ring(std::size_t n, double cy, double cx, double r0, double r1) {
  EditMask m(PlaneShape{1, n, n});
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double r = std::hypot(double(y) - cy, double(x) - cx);
      m.set(0, y, x, r >= r0 && r <= r1);
    }
  return m;
}

}  // namespace

TEST(DistanceTransform, AllOnesIsZero) {
  const auto d = distance_transform(EditMask(PlaneShape{2, 5, 7}, 1));
  for (double v : d.values()) EXPECT_EQ(v, 0.0);
}

TEST(DistanceTransform, SinglePixelCorner) {
  EditMask m(PlaneShape{1, 3, 3});
  m.set(0, 0, 0, true);
  EXPECT_NEAR(distance_transform(m).at(0, 2, 2), 2.0 * std::sqrt(2.0), 1e-12);
}

TEST(DistanceTransform, EmptyFrameIsFlagged) {
  EditMask m(PlaneShape{2, 4, 4});
  m.set(1, 2, 2, true);
  const auto d = distance_transform(m);
  EXPECT_TRUE(d.frame_empty(0));
  EXPECT_FALSE(d.frame_empty(1));
  EXPECT_TRUE(std::isinf(d.at(0, 1, 1)));
  EXPECT_EQ(d.at(1, 2, 2), 0.0);
}

TEST(DistanceTransform, RandomMasksMatchBruteForce) {
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const double density = 0.002 + 0.3 * double(seed % 10) / 10.0;
    expect_matches_brute_force(random_mask(PlaneShape{1, 32, 32}, seed, density));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 5.0);
}

TEST(DistanceTransform, StructuredMasksMatchBruteForce) {
  expect_matches_brute_force(ring(32, 15.5, 15.5, 6.0, 8.0));
  expect_matches_brute_force(ring(32, 3.0, 28.0, 10.0, 11.0));
  EditMask diag(PlaneShape{1, 32, 32}), anti(PlaneShape{1, 32, 32}), edge(PlaneShape{1, 17, 40});
  for (std::size_t i = 0; i < 32; ++i) {
    diag.set(0, i, i, true);
    anti.set(0, i, 31 - i, true);
  }
  for (std::size_t x = 0; x < 40; ++x) edge.set(0, 16, x, true);
  expect_matches_brute_force(diag);
  expect_matches_brute_force(anti);
  expect_matches_brute_force(edge);
  EditMask corners(PlaneShape{3, 9, 13});
  corners.set(0, 0, 0, true);
  corners.set(1, 8, 12, true);
  corners.set(2, 0, 12, true);
  corners.set(2, 8, 0, true);
  expect_matches_brute_force(corners);
}

TEST(CoefficientField, Anchors) {
  EditMask m(PlaneShape{1, 1, 41});
  m.set(0, 0, 0, true);
  const auto w = coefficient_field(m, 16.0);
  EXPECT_EQ(w.at(0, 0, 0), 1.0);
  EXPECT_EQ(w.at(0, 0, 8), 0.5);
  EXPECT_EQ(w.at(0, 0, 16), 0.0);
  EXPECT_EQ(w.at(0, 0, 20), 0.0);
  EXPECT_EQ(coefficient_field(m, 16.0, FarField::literal_one_beyond_band).at(0, 0, 20), 1.0);
  EXPECT_EQ(coefficient_field(m, 16.0, FarField::literal_one_beyond_band).at(0, 0, 16), 0.0);
}

TEST(CoefficientField, EmptyFrameIsZero) {
  const auto w = coefficient_field(EditMask(PlaneShape{1, 4, 4}), 16.0, FarField::literal_one_beyond_band);
  for (double v : w.values()) EXPECT_EQ(v, 0.0);
}

TEST(CoefficientField, LipschitzInDistance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = random_mask(PlaneShape{1, 32, 32}, seed, 0.01);
    const double width = 4.0 + double(seed);
    const auto w = coefficient_field(m, width);
    for (std::size_t y = 0; y < 32; ++y)
      for (std::size_t x = 0; x + 1 < 32; ++x) {
        ASSERT_LE(std::abs(w.at(0, y, x + 1) - w.at(0, y, x)), 1.0 / width + 1e-12);
        ASSERT_LE(std::abs(w.at(0, x + 1, y) - w.at(0, x, y)), 1.0 / width + 1e-12);
      }
  }
}

TEST(CoefficientField, RejectsNonPositiveWidth) {
  const EditMask m(PlaneShape{1, 2, 2}, 1);
  EXPECT_THROW(coefficient_field(m, 0.0), Error);
  EXPECT_THROW(coefficient_field(m, -1.0), Error);
}

TEST(Dilate, Basics) {
  const auto m = random_mask(PlaneShape{2, 8, 8}, 3, 0.2);
  EXPECT_EQ(dilate(m, 0.0), m);
  const auto all = dilate(m, std::hypot(8.0, 8.0));
  for (std::size_t f = 0; f < 2; ++f) {
    if (!m.frame_empty(f)) {
      for (std::size_t p = 0; p < 64; ++p) EXPECT_EQ(all.values()[f * 64 + p], 1);
    }
  }
  EXPECT_THROW(dilate(m, -1.0), Error);
}

TEST(Dilate, RadiusTwoDisk) {
  EditMask m(PlaneShape{1, 9, 9});
  m.set(0, 4, 4, true);
  const auto d = dilate(m, 2.0);
  std::size_t expected = 0;
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) {
      const bool in = (y - 4) * (y - 4) + (x - 4) * (x - 4) <= 4;
      expected += in;
      EXPECT_EQ(d.at(0, y, x), in);
    }
  EXPECT_EQ(expected, 13u);
  EXPECT_EQ(d.count(), 13u);
}
