#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "noisedit/schedule.hpp"

using namespace noisedit;

namespace {

// Direct product over the 1000 training betas.
double linear_product(int k) {
  double ab = 1.0;
  for (int j = 1; j <= k; ++j) ab *= 1.0 - (1e-4 + (2e-2 - 1e-4) * (j - 1) / 999.0);
  return ab;
}

}  // namespace

TEST(NoiseSchedule, LinearMatchesTrainingProduct) {
  const auto s = NoiseSchedule::linear(100);
  ASSERT_EQ(s.total_steps(), 100);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  for (int i = 1; i <= 100; ++i) EXPECT_NEAR(s.alpha_bar(i) / linear_product(10 * i), 1.0, 1e-12) << i;
  EXPECT_NEAR(s.alpha_bar(100), 4.04e-5, 0.01e-5);
}

TEST(NoiseSchedule, FullHorizonIsExact) {
  const auto s = NoiseSchedule::linear(1000);
  for (int k : {1, 2, 10, 500, 1000}) EXPECT_NEAR(s.alpha_bar(k) / linear_product(k), 1.0, 1e-12);
}

TEST(NoiseSchedule, NonDivisorStepCountsInterpolateInLogSpace) {
  const auto s = NoiseSchedule::linear(300);
  // i = 1 lands at training step 3.333...
  const double expect = std::exp(std::log(linear_product(3)) +
                                 (std::log(linear_product(4)) - std::log(linear_product(3))) / 3.0);
  EXPECT_NEAR(s.alpha_bar(1), expect, 1e-14);
  EXPECT_NEAR(s.alpha_bar(300), linear_product(1000), 1e-15);
}

TEST(NoiseSchedule, StrictlyDecreasingForManyLengths) {
  for (int T : {1, 2, 7, 50, 100, 200, 999, 1000, 2500}) {
    for (auto kind : {ScheduleKind::linear, ScheduleKind::cosine}) {
      const auto s = NoiseSchedule::make(kind, T);
      for (int i = 1; i <= T; ++i) ASSERT_LT(s.alpha_bar(i), s.alpha_bar(i - 1)) << T << " " << i;
      ASSERT_GT(s.alpha_bar(T), 0.0);
    }
  }
}

TEST(NoiseSchedule, CosineFollowsSquaredCosine) {
  const auto s = NoiseSchedule::cosine(100);
  auto f = [](double t) {
    const double c = std::cos((t + 0.008) / 1.008 * std::numbers::pi / 2.0);
    return c * c;
  };
  // Away from the clipped tail alpha_bar is the ratio f(t) / f(0).
  for (int i : {1, 10, 50, 90}) EXPECT_NEAR(s.alpha_bar(i), f(i / 100.0) / f(0.0), 1e-12) << i;
}

TEST(NoiseSchedule, Validation) {
  EXPECT_THROW(NoiseSchedule({1.0}), Error);
  EXPECT_THROW(NoiseSchedule({0.9, 0.5}), Error);
  EXPECT_THROW(NoiseSchedule({1.0, 0.5, 0.6}), Error);
  EXPECT_THROW(NoiseSchedule({1.0, 0.0}), Error);
  EXPECT_THROW(NoiseSchedule::linear(0), Error);
  const auto s = NoiseSchedule::linear(10);
  try {
    s.alpha_bar(11);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::domain);
  }
  EXPECT_THROW(s.check_step(-1), Error);
}

TEST(NoiseSchedule, ParseKind) {
  EXPECT_EQ(parse_schedule_kind("cosine"), ScheduleKind::cosine);
  EXPECT_EQ(to_string(ScheduleKind::linear), "linear");
  EXPECT_THROW(parse_schedule_kind("quadratic"), Error);
}
