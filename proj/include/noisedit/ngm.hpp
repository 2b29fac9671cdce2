#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <string_view>

#include "noisedit/denoiser.hpp"
#include "noisedit/error.hpp"
#include "noisedit/latent.hpp"
#include "noisedit/sampler.hpp"
#include "noisedit/schedule.hpp"

namespace noisedit {

/// Inclusive step range [lo, hi] in which the unedited region is re-injected
/// from the inversion trajectory.
class GuidanceWindow {
 public:
  /// lo = ceil(alpha T), hi = floor(beta T). Products within 1e-9 of an
  /// integer snap to it so 0.48 * 100 gives 48, not 47.999...
  static GuidanceWindow from_fractions(double alpha, double beta, int total_steps) {
    if (!(alpha > 0.0 && alpha <= beta && beta <= 1.0)) {
      fail(ErrorCode::config, "guidance window needs 0 < alpha <= beta <= 1, got alpha = " + std::to_string(alpha) +
                                  ", beta = " + std::to_string(beta));
    }
    const int lo = static_cast<int>(std::ceil(snap(alpha * total_steps)));
    const int hi = static_cast<int>(std::floor(snap(beta * total_steps)));
    if (lo > hi) {
      fail(ErrorCode::config, "guidance window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                  "] is empty at T = " + std::to_string(total_steps));
    }
    return GuidanceWindow(lo, hi);
  }

  static GuidanceWindow from_indices(int lo, int hi) {
    if (lo < 0 || lo > hi) {
      fail(ErrorCode::config, "guidance window [" + std::to_string(lo) + ", " + std::to_string(hi) + "] is invalid");
    }
    return GuidanceWindow(lo, hi);
  }

  /// Window that never fires.
  static GuidanceWindow disabled() { return GuidanceWindow(1, 0); }

  int lo() const { return lo_; }
  int hi() const { return hi_; }
  bool empty() const { return lo_ > hi_; }
  bool contains(int i) const { return i >= lo_ && i <= hi_; }

  friend bool operator==(const GuidanceWindow&, const GuidanceWindow&) = default;

 private:
  GuidanceWindow(int lo, int hi) : lo_(lo), hi_(hi) {}

  static double snap(double x) {
    const double r = std::round(x);
    return std::abs(x - r) < 1e-9 ? r : x;
  }

  int lo_;
  int hi_;
};

/// Pairing of the post-step state with a trajectory entry.
///   post_step_level: after reverse_step(., i) the state sits at level i-1
///                    and is matched with entry i-1 (window tested on i-1).
///   pre_step_index:  the state is matched with entry i, the index of the
///                    step just taken (one noise level off).
enum class GuidanceAlignment { post_step_level, pre_step_index };

inline GuidanceAlignment parse_guidance_alignment(std::string_view s) {
  if (s == "post_step_level") return GuidanceAlignment::post_step_level;
  if (s == "pre_step_index") return GuidanceAlignment::pre_step_index;
  fail(ErrorCode::config, "ngm_alignment must be post_step_level or pre_step_index, got '" + std::string(s) + "'");
}

inline std::string_view to_string(GuidanceAlignment a) {
  return a == GuidanceAlignment::post_step_level ? "post_step_level" : "pre_step_index";
}

/// M * z_bar + (1 - M) * z_i inside the window, z_bar unchanged outside.
inline LatentVolume guide_step(const LatentVolume& z_bar, const InversionTrajectory& trajectory, const EditMask& mask,
                               int i, const GuidanceWindow& window) {
  if (!window.contains(i)) return z_bar;
  return masked_select(mask, z_bar, trajectory.at(i));
}

/// Called with (level, state) after every step of guided_denoise.
using StepObserver = std::function<void(int, const LatentVolume&)>;

/// Denoises from t_start to 0, re-injecting the unedited region inside the
/// window. Steps below the window run unguided.
inline LatentVolume guided_denoise(const LatentVolume& z_hat_t, int t_start, const InversionTrajectory& trajectory,
                                   const EditMask& mask, const GuidanceWindow& window, const Denoiser& denoiser,
                                   const ConditioningVector& cond_target, const NoiseSchedule& sched,
                                   SamplerKind sampler,
                                   GuidanceAlignment alignment = GuidanceAlignment::post_step_level,
                                   const StepObserver& observer = {}) {
  sched.check_step(t_start);
  detail::require_plane_match(z_hat_t.shape(), mask.shape(), "guided_denoise");
  LatentVolume z = z_hat_t;
  for (int i = t_start; i >= 1; --i) {
    z = reverse_step(z, i, denoiser, cond_target, sampler, sched);
    const int entry = alignment == GuidanceAlignment::post_step_level ? i - 1 : i;
    z = guide_step(z, trajectory, mask, entry, window);
    if (observer) observer(i - 1, z);
  }
  return z;
}

}  // namespace noisedit
