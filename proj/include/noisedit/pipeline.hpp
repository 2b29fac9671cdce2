#pragma once

// End-to-end edit: instruction analysis -> inversion and structural noise
// initialization -> guided denoising -> latent-space report.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "noisedit/config.hpp"
#include "noisedit/denoiser.hpp"
#include "noisedit/eiam.hpp"
#include "noisedit/error.hpp"
#include "noisedit/latent.hpp"
#include "noisedit/maskops.hpp"
#include "noisedit/ngm.hpp"
#include "noisedit/sampler.hpp"
#include "noisedit/schedule.hpp"
#include "noisedit/snis.hpp"

namespace noisedit {

struct EditReport {
  /// Mean squared deviation from the source outside the m-dilated mask.
  double unedited_mse = 0.0;
  /// ||edited - source|| / ||source|| over the same region.
  double unedited_rel_l2 = 0.0;
  std::size_t unedited_elements = 0;
  /// |mean(edited on mask) - mu_target| / |mu_source - mu_target|.
  std::optional<double> edited_mean_shift;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::string source_prompt;
  std::string target_prompt;
  std::string config;

  /// Structured form; timings are left out when `with_timings` is false so
  /// repeated runs can be compared byte for byte.
  nlohmann::json to_json(bool with_timings = true) const {
    nlohmann::json j;
    j["unedited_mse"] = unedited_mse;
    j["unedited_rel_l2"] = unedited_rel_l2;
    j["unedited_elements"] = unedited_elements;
    j["edited_mean_shift"] = edited_mean_shift ? nlohmann::json(*edited_mean_shift) : nlohmann::json(nullptr);
    j["source_prompt"] = source_prompt;
    j["target_prompt"] = target_prompt;
    j["config"] = config;
    if (with_timings) {
      nlohmann::json t = nlohmann::json::object();
      for (const auto& [stage, s] : stage_seconds) t[stage] = s;
      j["stage_seconds"] = t;
    }
    return j;
  }
};

/// Condition means used for the mean-shift metric.
struct ReportReference {
  const GaussianWorld* world = nullptr;
  int source_condition = 0;
  int target_condition = 0;
};

inline EditReport compute_report(const LatentVolume& source, const LatentVolume& edited, const EditMask& mask,
                                 double transition_width, const ReportReference& ref = {}) {
  detail::require_same_shape(source, edited, "compute_report");
  detail::require_plane_match(source.shape(), mask.shape(), "compute_report");
  const EditMask band = dilate(mask, transition_width);

  EditReport r;
  double sq = 0.0, ref_sq = 0.0;
  std::size_t n = 0;
  detail::for_each_broadcast(source.shape(), [&](std::size_t e, std::size_t p) {
    if (band.values()[p]) return;
    const double d = edited[e] - source[e];
    sq += d * d;
    ref_sq += source[e] * source[e];
    ++n;
  });
  r.unedited_elements = n;
  r.unedited_mse = n > 0 ? sq / double(n) : 0.0;
  r.unedited_rel_l2 = ref_sq > 0.0 ? std::sqrt(sq / ref_sq) : std::sqrt(sq);

  if (ref.world && mask.count() > 0) {
    const LatentVolume& mu_s = ref.world->mean(ref.source_condition);
    const LatentVolume& mu_t = ref.world->mean(ref.target_condition);
    detail::require_same_shape(edited, mu_t, "compute_report");
    double e_sum = 0.0, s_sum = 0.0, t_sum = 0.0;
    std::size_t k = 0;
    detail::for_each_broadcast(source.shape(), [&](std::size_t e, std::size_t p) {
      if (!mask.values()[p]) return;
      e_sum += edited[e];
      s_sum += mu_s[e];
      t_sum += mu_t[e];
      ++k;
    });
    const double denom = std::abs(s_sum - t_sum) / double(k);
    if (denom > 0.0) r.edited_mean_shift = std::abs(e_sum - t_sum) / double(k) / denom;
  }
  return r;
}

struct EditRequest {
  std::string video_ref;
  std::string instruction;
};

struct EditResult {
  LatentVolume edited;
  EditReport report;
  eiam::PromptPair prompts;
  EditMask mask;
  ConditioningVector source_cond;
  ConditioningVector target_cond;
  LatentVolume z_hat;
  SnisBranches branches;
};

namespace detail {

class StageClock {
 public:
  explicit StageClock(EditReport& report) : report_(report) {}

  template <typename Fn>
  auto run(const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(stage, start);
      } else {
        auto out = fn();
        record(stage, start);
        return out;
      }
    } catch (const Error& e) {
      fail(e.code(), "[" + stage + "] " + e.detail());
    }
  }

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point start) {
    report_.stage_seconds.emplace_back(
        stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }

  EditReport& report_;
};

}  // namespace detail

struct PipelineHooks {
  /// Used when cfg.inpaint == external; otherwise built from cfg.inpaint_url
  /// or EIAM_INPAINT_URL.
  InpaintHook external_inpaint;
  /// Reference means for the mean-shift metric.
  const GaussianWorld* world = nullptr;
  StepObserver observer;
};

inline EditResult run_edit(const LatentVolume& source, const eiam::InstructionAnalyzer& analyzer,
                           const EditRequest& request, const EditConfig& cfg, const Denoiser& denoiser,
                           const PipelineHooks& hooks = {}) {
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(e.code(), "[config] " + e.detail());
  }
  EditReport report;
  detail::StageClock clock(report);
  const NoiseSchedule sched = NoiseSchedule::make(cfg.schedule, cfg.total_steps);
  const GuidanceWindow window = cfg.guidance_window();
  const int t = cfg.resolved_t_start();

  auto [prompts, mask] = clock.run("eiam", [&] {
    const std::string source_prompt = analyzer.describe_source(request.video_ref);
    eiam::PromptPair p = analyzer.derive_target(source_prompt, request.instruction);
    EditMask m = analyzer.segment_objects(request.video_ref, p.objects);
    if (m.shape() != plane_of(source.shape())) {
      fail(ErrorCode::dimension, "mask " + describe(m.shape()) + " does not match latent " + describe(source.shape()));
    }
    return std::make_pair(std::move(p), std::move(m));
  });
  const ConditioningVector cond_s = eiam::embed_prompt(prompts.source_prompt, cfg.condition_length);
  const ConditioningVector cond_t = eiam::embed_prompt(prompts.target_prompt, cfg.condition_length);

  BranchOptions opts;
  opts.inversion_cond = cond_s;
  opts.trajectory_up_to = window.empty() ? t : std::max(t, window.hi());
  if (cfg.inpaint == InpaintMode::external) {
    opts.external_inpaint = hooks.external_inpaint;
    if (!opts.external_inpaint) {
      std::string url = cfg.inpaint_url;
      if (url.empty()) {
        const char* env = std::getenv("EIAM_INPAINT_URL");
        url = env ? env : "";
      }
      if (url.empty()) fail(ErrorCode::config, "[snis] inpaint = external needs inpaint_url or EIAM_INPAINT_URL");
      opts.external_inpaint = eiam::http_inpaint_hook(url);
    }
  }

  SnisBranches branches = clock.run(
      "snis", [&] { return prepare_branches(source, mask, cfg.snis(), denoiser, cond_t, sched, cfg.sampler, opts); });
  LatentVolume z_hat = clock.run("structural_init", [&] {
    return structural_init(branches.z_star_t, branches.z_t, mask, cfg.transition_width, cfg.far_field);
  });
  LatentVolume edited = clock.run("guided_denoise", [&] {
    return guided_denoise(z_hat, t, branches.trajectory, mask, window, denoiser, cond_t, sched, cfg.sampler,
                          cfg.ngm_alignment, hooks.observer);
  });

  clock.run("report", [&] {
    ReportReference ref;
    if (hooks.world) ref = {hooks.world, cond_s.condition_id(), cond_t.condition_id()};
    EditReport metrics = compute_report(source, edited, mask, cfg.transition_width, ref);
    report.unedited_mse = metrics.unedited_mse;
    report.unedited_rel_l2 = metrics.unedited_rel_l2;
    report.unedited_elements = metrics.unedited_elements;
    report.edited_mean_shift = metrics.edited_mean_shift;
  });
  report.source_prompt = prompts.source_prompt;
  report.target_prompt = prompts.target_prompt;
  report.config = to_text(cfg);

  return EditResult{std::move(edited), std::move(report), std::move(prompts), std::move(mask), cond_s, cond_t,
                    std::move(z_hat), std::move(branches)};
}

// Previews.

struct PreviewBounds {
  double min = 0.0;
  double max = 0.0;
};

inline std::string preview_name(const std::string& prefix, std::size_t frame, std::size_t channel) {
  return prefix + "_f" + std::to_string(frame) + "_c" + std::to_string(channel) + ".pgm";
}

inline std::uint8_t quantize(double v, const PreviewBounds& b) {
  if (!(b.max > b.min)) return 128;
  const double q = std::round((v - b.min) / (b.max - b.min) * 255.0);
  return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
}

inline double dequantize(std::uint8_t q, const PreviewBounds& b) {
  if (!(b.max > b.min)) return b.min;
  return b.min + double(q) / 255.0 * (b.max - b.min);
}

/// One binary PGM per frame and channel, min-max normalized over the whole
/// volume, plus `<prefix>_bounds.txt`. Returns the written paths.
inline std::vector<std::filesystem::path> emit_preview(const LatentVolume& volume, const std::string& prefix) {
  const Shape& s = volume.shape();
  const VolumeStats st = stats(volume.values());
  const PreviewBounds bounds{st.min, st.max};
  std::vector<std::filesystem::path> written;
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t c = 0; c < s.channels; ++c) {
      std::string bytes = "P5\n" + std::to_string(s.width) + " " + std::to_string(s.height) + "\n255\n";
      for (std::size_t y = 0; y < s.height; ++y) {
        for (std::size_t x = 0; x < s.width; ++x) bytes.push_back(static_cast<char>(quantize(volume.at(f, c, y, x), bounds)));
      }
      written.emplace_back(preview_name(prefix, f, c));
      write_file_bytes(written.back(), bytes);
    }
  }
  char text[128];
  std::snprintf(text, sizeof text, "min = %.17g\nmax = %.17g\n", bounds.min, bounds.max);
  written.emplace_back(prefix + "_bounds.txt");
  write_file_bytes(written.back(), text);
  return written;
}

inline PreviewBounds read_preview_bounds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  PreviewBounds b;
  std::string key, eq;
  bool have_min = false, have_max = false;
  while (in >> key >> eq) {
    double v = 0.0;
    if (eq != "=" || !(in >> v)) fail(ErrorCode::format, "malformed bounds file " + path.string());
    if (key == "min") b.min = v, have_min = true;
    else if (key == "max") b.max = v, have_max = true;
  }
  if (!have_min || !have_max) fail(ErrorCode::format, "bounds file lacks min/max: " + path.string());
  return b;
}

/// Pixel bytes of a binary PGM written by emit_preview.
inline std::vector<std::uint8_t> read_pgm_pixels(const std::filesystem::path& path, std::size_t& width,
                                                 std::size_t& height) {
  const std::string bytes = read_file_bytes(path);
  std::istringstream in(bytes);
  std::string magic;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || maxval != 255) fail(ErrorCode::format, "not an 8-bit binary PGM: " + path.string());
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() - offset != width * height) fail(ErrorCode::length, "PGM payload size mismatch: " + path.string());
  return {bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end()};
}

}  // namespace noisedit
