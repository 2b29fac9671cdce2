#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "noisedit/container.hpp"
#include "noisedit/denoiser.hpp"
#include "noisedit/sampler.hpp"
#include "support.hpp"

using namespace noisedit;

namespace {

const Shape kShape{1, 2, 4, 4};

GaussianWorld world_with(double mu, double sigma, int id = 0) {
  return GaussianWorld({{id, LatentVolume(kShape, mu)}}, sigma);
}

}  // namespace

TEST(ConditioningVector, ArgmaxFirstOnTies) {
  EXPECT_EQ((ConditioningVector{{0.0, 2.0, 2.0, 1.0}}).condition_id(), 1);
  EXPECT_EQ(ConditioningVector{}.condition_id(), 0);
  EXPECT_EQ(ConditioningVector::one_hot(5).condition_id(), 5);
  EXPECT_THROW(ConditioningVector::one_hot(8), Error);
  EXPECT_THROW((ConditioningVector{{}}).condition_id(), Error);
}

TEST(ZeroDenoiser, ReturnsZeros) {
  const auto z = testing_support::random_volume(kShape, 1);
  const auto eps = ZeroDenoiser().predict_noise(z, 3, {});
  EXPECT_EQ(eps, LatentVolume(kShape));
}

TEST(ZeroDenoiser, EulerLeavesStateUnchanged) {
  const auto sched = NoiseSchedule::linear(10);
  const auto z = testing_support::random_volume(kShape, 2);
  EXPECT_EQ(denoise_range(z, 10, 0, ZeroDenoiser(), {}, SamplerKind::euler, sched), z);
}

TEST(ZeroDenoiser, DdimRescalesByProductOfFactors) {
  const auto sched = NoiseSchedule::linear(100);
  const auto z = testing_support::random_volume(kShape, 3);
  double factor = 1.0;
  for (int i = 100; i >= 1; --i) factor *= std::sqrt(sched.alpha_bar(i - 1) / sched.alpha_bar(i));
  EXPECT_NEAR(factor, std::sqrt(1.0 / sched.alpha_bar(100)), 1e-9 * factor);
  const auto out = denoise_range(z, 100, 0, ZeroDenoiser(), {}, SamplerKind::ddim, sched);
  for (std::size_t e = 0; e < z.size(); ++e) EXPECT_NEAR(out[e], factor * z[e], 1e-10 * factor);
}

TEST(GaussianWorldDenoiser, PointMassLimit) {
  const auto sched = NoiseSchedule::linear(50);
  const double mu = 0.7;
  const GaussianWorldDenoiser den(world_with(mu, 1e-9), sched);
  const auto z = testing_support::random_volume(kShape, 4);
  for (int i : {1, 10, 50}) {
    const double a = sched.alpha_bar(i);
    const auto eps = den.predict_noise(z, i, {});
    for (std::size_t e = 0; e < z.size(); ++e) {
      EXPECT_NEAR(eps[e], (z[e] - std::sqrt(a) * mu) / std::sqrt(1.0 - a), 1e-9);
    }
  }
}

TEST(GaussianWorldDenoiser, PureNoiseLimit) {
  const NoiseSchedule sched({1.0, 1e-14});
  const GaussianWorldDenoiser den(world_with(3.0, 2.0), sched);
  const auto z = testing_support::random_volume(kShape, 5);
  const auto eps = den.predict_noise(z, 1, {});
  for (std::size_t e = 0; e < z.size(); ++e) EXPECT_NEAR(eps[e], z[e], 1e-6);
}

TEST(GaussianWorldDenoiser, MatchesMonteCarloPosterior) {
  // alpha_bar = 0.5, sigma = 1, mu = 0, z = 1.
  const NoiseSchedule sched({1.0, 0.5});
  const GaussianWorldDenoiser den(world_with(0.0, 1.0), sched);
  const double predicted = den.predict_noise(LatentVolume(kShape, 1.0), 1, {})[0];

  std::mt19937_64 gen(2024);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double h = 0.02;
  double sum = 0.0, sum2 = 0.0;
  long count = 0;
  for (int k = 0; k < 1000000; ++k) {
    const double x0 = n01(gen), eps = n01(gen);
    const double z = std::sqrt(0.5) * x0 + std::sqrt(0.5) * eps;
    if (std::abs(z - 1.0) < h) {
      sum += eps;
      sum2 += eps * eps;
      ++count;
    }
  }
  ASSERT_GT(count, 1000);
  const double mean = sum / count;
  const double se = std::sqrt((sum2 / count - mean * mean) / count);
  EXPECT_NEAR(predicted, std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(mean, predicted, 3.0 * se);
}

TEST(GaussianWorldDenoiser, SelectsMeanByArgmax) {
  const auto sched = NoiseSchedule::linear(10);
  const GaussianWorld w({{0, LatentVolume(kShape, 0.0)}, {2, LatentVolume(kShape, 5.0)}}, 1.0);
  const GaussianWorldDenoiser den(w, sched);
  const LatentVolume z(kShape, 1.0);
  EXPECT_NE(den.predict_noise(z, 5, ConditioningVector::one_hot(0)), den.predict_noise(z, 5, ConditioningVector::one_hot(2)));
  try {
    den.predict_noise(z, 5, ConditioningVector::one_hot(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::condition);
  }
  EXPECT_THROW(den.predict_noise(LatentVolume(Shape{1, 1, 1, 1}), 5, {}), Error);
}

TEST(GaussianWorld, Validation) {
  EXPECT_THROW(GaussianWorld({}, 1.0), Error);
  EXPECT_THROW(world_with(0.0, 0.0), Error);
  EXPECT_THROW(GaussianWorld({{0, LatentVolume(kShape)}, {1, LatentVolume(Shape{1, 1, 1, 1})}}, 1.0), Error);
}

TEST(GaussianWorld, LoadsManifestWithRelativePaths) {
  const auto dir = std::filesystem::temp_directory_path() / "noisedit_world_test";
  std::filesystem::create_directories(dir);
  write_volume(dir / "a.latf", LatentVolume(kShape, 0.25));
  write_volume(dir / "b.latf", LatentVolume(kShape, -1.5));
  std::ofstream(dir / "world.txt") << "# comment\n1 a.latf\n\n4 b.latf  # trailing\n";
  const auto w = load_world(dir / "world.txt", 0.5);
  EXPECT_EQ(w.means().size(), 2u);
  EXPECT_EQ(w.mean(4)[0], -1.5);
  EXPECT_EQ(w.sigma(), 0.5);
  std::ofstream(dir / "bad.txt") << "1 a.latf\n1 b.latf\n";
  EXPECT_THROW(load_world(dir / "bad.txt", 0.5), Error);
  std::filesystem::remove_all(dir);
}
