#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "noisedit/container.hpp"
#include "noisedit/denoiser.hpp"
#include "noisedit/error.hpp"
#include "noisedit/latent.hpp"
#include "noisedit/schedule.hpp"

namespace noisedit {

/// euler: z_{i-1} = z_i - eps (the schematic update).
/// ddim:  predict x0 from eps, re-noise to level i-1 with no stochasticity.
enum class SamplerKind { euler, ddim };

inline SamplerKind parse_sampler_kind(std::string_view s) {
  if (s == "euler") return SamplerKind::euler;
  if (s == "ddim") return SamplerKind::ddim;
  fail(ErrorCode::config, "sampler must be euler or ddim, got '" + std::string(s) + "'");
}

inline std::string_view to_string(SamplerKind k) { return k == SamplerKind::euler ? "euler" : "ddim"; }

/// Latents z_0..z_N at increasing noise levels; entry 0 is the clean latent.
class InversionTrajectory {
 public:
  explicit InversionTrajectory(LatentVolume z0) { entries_.push_back(std::move(z0)); }

  void append(LatentVolume z) {
    if (z.shape() != entries_.front().shape()) fail(ErrorCode::dimension, "trajectory entries must share one shape");
    entries_.push_back(std::move(z));
  }

  /// Highest step index held.
  int last_step() const { return static_cast<int>(entries_.size()) - 1; }
  bool contains(int i) const { return i >= 0 && i <= last_step(); }

  const LatentVolume& at(int i) const {
    if (!contains(i)) {
      fail(ErrorCode::trajectory, "no trajectory entry for step " + std::to_string(i) + " (have 0.." +
                                      std::to_string(last_step()) + ")");
    }
    return entries_[static_cast<std::size_t>(i)];
  }

  const std::vector<LatentVolume>& entries() const { return entries_; }

 private:
  std::vector<LatentVolume> entries_;
};

namespace detail {

inline LatentVolume checked_prediction(const Denoiser& denoiser, const LatentVolume& z, int step,
                                       const ConditioningVector& cond) {
  LatentVolume eps = denoiser.predict_noise(z, step, cond);
  if (eps.shape() != z.shape()) {
    fail(ErrorCode::numerical, "denoiser changed shape " + describe(z.shape()) + " -> " + describe(eps.shape()));
  }
  require_finite(eps.values(), "denoiser");
  return eps;
}

// Moves a latent from level `from` to level `to` along the deterministic
// DDIM path defined by the noise estimate eps.
inline LatentVolume ddim_transfer(const LatentVolume& z, const LatentVolume& eps, double ab_from, double ab_to) {
  const double s_from = std::sqrt(ab_from), n_from = std::sqrt(1.0 - ab_from);
  const double s_to = std::sqrt(ab_to), n_to = std::sqrt(1.0 - ab_to);
  LatentVolume out(z.shape());
  for (std::size_t e = 0; e < z.size(); ++e) {
    const double x0 = (z[e] - n_from * eps[e]) / s_from;
    out[e] = s_to * x0 + n_to * eps[e];
  }
  require_finite(out.values(), "ddim update");
  return out;
}

}  // namespace detail

/// z_t = sqrt(ab_t) z0 + sqrt(1 - ab_t) eps.
inline LatentVolume forward_noise(const LatentVolume& z0, int t, const LatentVolume& eps, const NoiseSchedule& sched) {
  sched.check_step(t);
  detail::require_same_shape(z0, eps, "forward_noise");
  const double a = sched.alpha_bar(t);
  LatentVolume out = axpby(std::sqrt(a), z0, std::sqrt(1.0 - a), eps);
  detail::require_finite(out.values(), "forward_noise");
  return out;
}

/// One denoising step from level i to level i-1.
inline LatentVolume reverse_step(const LatentVolume& z, int i, const Denoiser& denoiser, const ConditioningVector& cond,
                                 SamplerKind sampler, const NoiseSchedule& sched) {
  if (i < 1 || i > sched.total_steps()) {
    fail(ErrorCode::domain, "reverse_step index " + std::to_string(i) + " outside [1, " +
                                std::to_string(sched.total_steps()) + "]");
  }
  const LatentVolume eps = detail::checked_prediction(denoiser, z, i, cond);
  if (sampler == SamplerKind::euler) {
    LatentVolume out = axpby(1.0, z, -1.0, eps);
    detail::require_finite(out.values(), "euler update");
    return out;
  }
  return detail::ddim_transfer(z, eps, sched.alpha_bar(i), sched.alpha_bar(i - 1));
}

/// Fixed-point refinements per inversion step; 0 is the plain first-order
/// eps-reuse inversion.
inline constexpr int kDefaultInversionCorrectors = 1;

/// Inverse of reverse_step(., i): maps level i-1 to level i. The initial
/// guess uses eps(z_{i-1}, i) in place of the unknown eps(z_i, i); each
/// corrector re-evaluates eps at the current estimate of z_i.
inline LatentVolume inverse_step(const LatentVolume& z_prev, int i, const Denoiser& denoiser,
                                 const ConditioningVector& cond, SamplerKind sampler, const NoiseSchedule& sched,
                                 int correctors = kDefaultInversionCorrectors) {
  if (i < 1 || i > sched.total_steps()) {
    fail(ErrorCode::domain, "inverse_step index " + std::to_string(i) + " outside [1, " +
                                std::to_string(sched.total_steps()) + "]");
  }
  if (correctors < 0) fail(ErrorCode::domain, "corrector count must be >= 0");
  auto apply = [&](const LatentVolume& eps) {
    if (sampler == SamplerKind::euler) {
      LatentVolume out = axpby(1.0, z_prev, 1.0, eps);
      detail::require_finite(out.values(), "euler inversion");
      return out;
    }
    return detail::ddim_transfer(z_prev, eps, sched.alpha_bar(i - 1), sched.alpha_bar(i));
  };
  LatentVolume z = apply(detail::checked_prediction(denoiser, z_prev, i, cond));
  for (int k = 0; k < correctors; ++k) z = apply(detail::checked_prediction(denoiser, z, i, cond));
  return z;
}

/// DDIM inversion: trajectory entries z_0..z_{up_to}.
inline InversionTrajectory invert(const LatentVolume& z0, int up_to, const Denoiser& denoiser,
                                  const ConditioningVector& cond, SamplerKind sampler, const NoiseSchedule& sched,
                                  int correctors = kDefaultInversionCorrectors) {
  if (up_to < 0 || up_to > sched.total_steps()) {
    fail(ErrorCode::domain, "inversion target " + std::to_string(up_to) + " outside [0, " +
                                std::to_string(sched.total_steps()) + "]");
  }
  InversionTrajectory traj(z0);
  for (int i = 1; i <= up_to; ++i) {
    traj.append(inverse_step(traj.at(i - 1), i, denoiser, cond, sampler, sched, correctors));
  }
  return traj;
}

/// Applies reverse_step for i = from, from-1, ..., to+1; result is at level `to`.
inline LatentVolume denoise_range(LatentVolume z, int from, int to, const Denoiser& denoiser,
                                  const ConditioningVector& cond, SamplerKind sampler, const NoiseSchedule& sched) {
  if (to < 0 || to > from) {
    fail(ErrorCode::domain, "denoise range " + std::to_string(from) + " -> " + std::to_string(to) + " is invalid");
  }
  for (int i = from; i > to; --i) z = reverse_step(z, i, denoiser, cond, sampler, sched);
  return z;
}

// Trajectory files are the entries' containers written back to back.

inline void write_trajectory(const std::filesystem::path& path, const InversionTrajectory& traj) {
  std::string bytes;
  for (const auto& z : traj.entries()) bytes += encode_container(to_container(z));
  write_file_bytes(path, bytes);
}

inline InversionTrajectory read_trajectory(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  std::size_t offset = 0;
  InversionTrajectory traj(latent_from(decode_container_at(bytes, offset)));
  while (offset < bytes.size()) traj.append(latent_from(decode_container_at(bytes, offset)));
  return traj;
}

}  // namespace noisedit
