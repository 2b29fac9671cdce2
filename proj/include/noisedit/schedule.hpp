#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "noisedit/error.hpp"

namespace noisedit {

enum class ScheduleKind { linear, cosine };

inline ScheduleKind parse_schedule_kind(std::string_view s) {
  if (s == "linear") return ScheduleKind::linear;
  if (s == "cosine") return ScheduleKind::cosine;
  fail(ErrorCode::config, "schedule must be linear or cosine, got '" + std::string(s) + "'");
}

inline std::string_view to_string(ScheduleKind k) { return k == ScheduleKind::linear ? "linear" : "cosine"; }

/// Cumulative signal levels alpha_bar[0..T] on the inference-step axis.
class NoiseSchedule {
 public:
  /// Betas are defined over this many training steps; inference steps sample
  /// the resulting log(alpha_bar) curve at i * kTrainingSteps / T.
  static constexpr int kTrainingSteps = 1000;

  explicit NoiseSchedule(std::vector<double> alphas_bar) : alphas_bar_(std::move(alphas_bar)) {
    if (alphas_bar_.size() < 2) fail(ErrorCode::domain, "schedule needs T >= 1");
    if (alphas_bar_[0] != 1.0) fail(ErrorCode::domain, "alpha_bar[0] must be 1");
    for (std::size_t i = 1; i < alphas_bar_.size(); ++i) {
      const double a = alphas_bar_[i];
      if (!(a > 0.0 && a <= 1.0)) fail(ErrorCode::domain, "alpha_bar[" + std::to_string(i) + "] outside (0, 1]");
      if (!(a < alphas_bar_[i - 1])) fail(ErrorCode::domain, "alpha_bar must be strictly decreasing");
    }
  }

  /// Linear betas from 1e-4 to 2e-2 over the training horizon.
  static NoiseSchedule linear(int total_steps, double beta_start = 1e-4, double beta_end = 2e-2) {
    std::vector<double> log_ab(kTrainingSteps + 1, 0.0);
    for (int k = 1; k <= kTrainingSteps; ++k) {
      const double beta = beta_start + (beta_end - beta_start) * (k - 1) / double(kTrainingSteps - 1);
      log_ab[k] = log_ab[k - 1] + std::log1p(-beta);
    }
    return resample(log_ab, total_steps);
  }

  /// Cosine schedule with the usual 0.008 offset and betas clipped at 0.999.
  static NoiseSchedule cosine(int total_steps) {
    auto f = [](double s) {
      const double c = std::cos((s + 0.008) / 1.008 * std::numbers::pi / 2.0);
      return c * c;
    };
    std::vector<double> log_ab(kTrainingSteps + 1, 0.0);
    for (int k = 1; k <= kTrainingSteps; ++k) {
      double beta = 1.0 - f(double(k) / kTrainingSteps) / f(double(k - 1) / kTrainingSteps);
      beta = std::min(beta, 0.999);
      log_ab[k] = log_ab[k - 1] + std::log1p(-beta);
    }
    return resample(log_ab, total_steps);
  }

  static NoiseSchedule make(ScheduleKind kind, int total_steps) {
    return kind == ScheduleKind::linear ? linear(total_steps) : cosine(total_steps);
  }

  int total_steps() const { return static_cast<int>(alphas_bar_.size()) - 1; }

  double alpha_bar(int i) const {
    check_step(i);
    return alphas_bar_[static_cast<std::size_t>(i)];
  }

  std::span<const double> alphas_bar() const { return alphas_bar_; }

  void check_step(int i) const {
    if (i < 0 || i > total_steps()) {
      fail(ErrorCode::domain, "step " + std::to_string(i) + " outside [0, " + std::to_string(total_steps()) + "]");
    }
  }

 private:
  // Piecewise-linear interpolation of log(alpha_bar) keeps the inference
  // schedule strictly decreasing for any T, and exact when T divides the
  // training horizon.
  static NoiseSchedule resample(const std::vector<double>& log_ab, int total_steps) {
    if (total_steps < 1) fail(ErrorCode::domain, "total_steps must be >= 1, got " + std::to_string(total_steps));
    std::vector<double> ab(static_cast<std::size_t>(total_steps) + 1);
    ab[0] = 1.0;
    for (int i = 1; i <= total_steps; ++i) {
      const long long num = static_cast<long long>(i) * kTrainingSteps;
      const long long k = num / total_steps;
      const double frac = double(num % total_steps) / total_steps;
      double l = log_ab[static_cast<std::size_t>(k)];
      if (frac > 0.0) l += frac * (log_ab[static_cast<std::size_t>(k) + 1] - l);
      ab[static_cast<std::size_t>(i)] = std::exp(l);
    }
    return NoiseSchedule(std::move(ab));
  }

  std::vector<double> alphas_bar_;
};

}  // namespace noisedit
