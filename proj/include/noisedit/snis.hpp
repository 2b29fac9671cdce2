#pragma once

// Structural noise initialization: the edited region starts from a seeded
// random-noise branch that is pre-denoised down to the editing step, the
// unedited region from the inversion branch, and the two are blended
// through the distance-based coefficient field.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "noisedit/denoiser.hpp"
#include "noisedit/error.hpp"
#include "noisedit/latent.hpp"
#include "noisedit/maskops.hpp"
#include "noisedit/rng.hpp"
#include "noisedit/sampler.hpp"
#include "noisedit/schedule.hpp"

namespace noisedit {

enum class InpaintMode { none, naive, external };

inline InpaintMode parse_inpaint_mode(std::string_view s) {
  if (s == "none") return InpaintMode::none;
  if (s == "naive") return InpaintMode::naive;
  if (s == "external") return InpaintMode::external;
  fail(ErrorCode::config, "inpaint must be none, naive or external, got '" + std::string(s) + "'");
}

inline std::string_view to_string(InpaintMode m) {
  switch (m) {
    case InpaintMode::none: return "none";
    case InpaintMode::naive: return "naive";
    case InpaintMode::external: return "external";
  }
  return "none";
}

/// Which latent the inversion branch starts from.
enum class InversionSource { original, inpainted };

inline InversionSource parse_inversion_source(std::string_view s) {
  if (s == "original") return InversionSource::original;
  if (s == "inpainted") return InversionSource::inpainted;
  fail(ErrorCode::config, "invert_source must be original or inpainted, got '" + std::string(s) + "'");
}

inline std::string_view to_string(InversionSource s) { return s == InversionSource::original ? "original" : "inpainted"; }

struct SnisConfig {
  int t_start = 95;
  int tau = 5;
  double transition_width = 16.0;
  std::uint64_t seed = 0;
  InpaintMode inpaint = InpaintMode::none;
  InversionSource invert_source = InversionSource::original;
  FarField far_field = FarField::zero_beyond_band;
  double inpaint_dilation = 2.0;
  int inversion_correctors = kDefaultInversionCorrectors;

  void validate(int total_steps) const {
    if (tau < 0) fail(ErrorCode::config, "tau must be >= 0, got " + std::to_string(tau));
    if (t_start < 0) fail(ErrorCode::config, "t_start must be >= 0, got " + std::to_string(t_start));
    if (t_start + tau > total_steps) {
      fail(ErrorCode::config, "t_start + tau = " + std::to_string(t_start + tau) + " exceeds T = " +
                                  std::to_string(total_steps));
    }
    if (!(transition_width > 0.0) || !std::isfinite(transition_width)) {
      fail(ErrorCode::config, "transition_width must be > 0");
    }
    if (!(inpaint_dilation >= 0.0)) fail(ErrorCode::config, "inpaint_dilation must be >= 0");
    if (inversion_correctors < 0) fail(ErrorCode::config, "inversion_correctors must be >= 0");
  }
};

/// (frames, mask) -> frames with the masked region filled.
using InpaintHook = std::function<LatentVolume(const LatentVolume&, const EditMask&)>;

struct InpaintResult {
  LatentVolume frames;
  /// Frames with no unmasked pixel; filled with the volume mean.
  std::vector<std::size_t> fully_masked_frames;
};

/// Harmonic fill: masked pixels solve the discrete Laplace equation with the
/// unmasked pixels as Dirichlet boundary (SOR on the 4-neighbour stencil,
/// image borders act as reflecting). Iterates until the largest update is
/// below 1e-6 relative to the field magnitude.
inline InpaintResult naive_inpaint(const LatentVolume& frames, const EditMask& mask) {
  const Shape& s = frames.shape();
  detail::require_plane_match(s, mask.shape(), "naive_inpaint");
  InpaintResult result{frames, {}};
  LatentVolume& out = result.frames;
  const std::size_t h = s.height, w = s.width;

  // Per-channel mean of unmasked values over the whole volume.
  std::vector<double> global_mean(s.channels, 0.0);
  for (std::size_t c = 0; c < s.channels; ++c) {
    double sum = 0.0, all = 0.0;
    std::size_t n = 0;
    for (std::size_t f = 0; f < s.frames; ++f) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          all += frames.at(f, c, y, x);
          if (!mask.at(f, y, x)) {
            sum += frames.at(f, c, y, x);
            ++n;
          }
        }
      }
    }
    global_mean[c] = n > 0 ? sum / double(n) : all / double(s.frames * h * w);
  }

  const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / double(std::max(h, w) + 1)));
  constexpr int kMaxSweeps = 200000;

  for (std::size_t f = 0; f < s.frames; ++f) {
    std::vector<std::size_t> holes;
    for (std::size_t p = 0; p < h * w; ++p) {
      if (mask.at(f, p / w, p % w)) holes.push_back(p);
    }
    if (holes.empty()) continue;
    if (holes.size() == h * w) {
      result.fully_masked_frames.push_back(f);
      for (std::size_t c = 0; c < s.channels; ++c) {
        for (std::size_t p = 0; p < h * w; ++p) out.at(f, c, p / w, p % w) = global_mean[c];
      }
      continue;
    }
    for (std::size_t c = 0; c < s.channels; ++c) {
      double known_sum = 0.0, scale = 1.0;
      std::size_t known = 0;
      for (std::size_t p = 0; p < h * w; ++p) {
        const double v = frames.at(f, c, p / w, p % w);
        scale = std::max(scale, std::abs(v));
        if (!mask.at(f, p / w, p % w)) {
          known_sum += v;
          ++known;
        }
      }
      for (std::size_t p : holes) out.at(f, c, p / w, p % w) = known_sum / double(known);

      bool converged = false;
      for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        double max_delta = 0.0;
        for (std::size_t p : holes) {
          const std::size_t y = p / w, x = p % w;
          double sum = 0.0;
          int n = 0;
          if (y > 0) sum += out.at(f, c, y - 1, x), ++n;
          if (y + 1 < h) sum += out.at(f, c, y + 1, x), ++n;
          if (x > 0) sum += out.at(f, c, y, x - 1), ++n;
          if (x + 1 < w) sum += out.at(f, c, y, x + 1), ++n;
          double& u = out.at(f, c, y, x);
          const double delta = omega * (sum / n - u);
          u += delta;
          max_delta = std::max(max_delta, std::abs(delta));
        }
        converged = max_delta < 1e-6 * scale;
      }
      if (!converged) fail(ErrorCode::numerical, "harmonic fill did not converge in frame " + std::to_string(f));
    }
  }
  return result;
}

/// z_hat = D(M) z_star + (1 - D(M)) z_t.
inline LatentVolume structural_init(const LatentVolume& z_star_t, const LatentVolume& z_t, const EditMask& mask,
                                    double m, FarField far_field = FarField::zero_beyond_band) {
  detail::require_same_shape(z_star_t, z_t, "structural_init");
  detail::require_plane_match(z_star_t.shape(), mask.shape(), "structural_init");
  return elementwise_lerp(z_star_t, z_t, coefficient_field(mask, m, far_field));
}

struct SnisBranches {
  LatentVolume z_star_start;  ///< random branch at t + tau
  LatentVolume z_star_t;      ///< random branch pre-denoised to t
  LatentVolume z_t;           ///< inversion branch at t
  InversionTrajectory trajectory;
  std::vector<std::size_t> fully_masked_frames;
};

struct BranchOptions {
  /// Conditioning for the inversion branch; the target conditioning if unset.
  std::optional<ConditioningVector> inversion_cond;
  /// Trajectory is built at least up to this step (and always up to t).
  int trajectory_up_to = 0;
  /// Replaces the seeded noise draw of the random branch.
  std::optional<LatentVolume> noise;
  /// Required when cfg.inpaint == external.
  InpaintHook external_inpaint;
};

/// Seeded standard-normal draw for the random branch.
inline LatentVolume random_branch_noise(std::uint64_t seed, const Shape& shape) {
  return CounterRng(seed).stream("snis.random-branch").gaussian_volume(shape);
}

inline SnisBranches prepare_branches(const LatentVolume& z0, const EditMask& mask, const SnisConfig& cfg,
                                     const Denoiser& denoiser, const ConditioningVector& cond_target,
                                     const NoiseSchedule& sched, SamplerKind sampler, const BranchOptions& opts = {}) {
  cfg.validate(sched.total_steps());
  detail::require_plane_match(z0.shape(), mask.shape(), "prepare_branches");
  detail::require_finite(z0.values(), "prepare_branches input");

  std::vector<std::size_t> fully_masked;
  LatentVolume source = z0;
  if (cfg.inpaint != InpaintMode::none) {
    const EditMask region = dilate(mask, cfg.inpaint_dilation);
    LatentVolume filled;
    if (cfg.inpaint == InpaintMode::naive) {
      InpaintResult r = naive_inpaint(z0, region);
      filled = std::move(r.frames);
      fully_masked = std::move(r.fully_masked_frames);
    } else {
      if (!opts.external_inpaint) fail(ErrorCode::config, "inpaint = external but no inpaint hook is configured");
      filled = opts.external_inpaint(z0, region);
      if (filled.shape() != z0.shape()) fail(ErrorCode::protocol, "inpaint hook returned a different shape");
    }
    // Unmasked content is the caller's, never the hook's.
    source = masked_select(region, filled, z0);
  }

  const int t = cfg.t_start;
  const LatentVolume noise = opts.noise ? *opts.noise : random_branch_noise(cfg.seed, z0.shape());
  if (noise.shape() != z0.shape()) fail(ErrorCode::dimension, "injected noise shape mismatch");

  LatentVolume z_star_start = forward_noise(source, t + cfg.tau, noise, sched);
  LatentVolume z_star_t = denoise_range(z_star_start, t + cfg.tau, t, denoiser, cond_target, sampler, sched);

  const LatentVolume& inversion_input = cfg.invert_source == InversionSource::original ? z0 : source;
  const ConditioningVector& inversion_cond = opts.inversion_cond ? *opts.inversion_cond : cond_target;
  const int up_to = std::clamp(std::max(t, opts.trajectory_up_to), 0, sched.total_steps());
  InversionTrajectory traj = invert(inversion_input, up_to, denoiser, inversion_cond, sampler, sched,
                                    cfg.inversion_correctors);
  LatentVolume z_t = traj.at(t);

  return SnisBranches{std::move(z_star_start), std::move(z_star_t), std::move(z_t), std::move(traj),
                      std::move(fully_masked)};
}

}  // namespace noisedit
