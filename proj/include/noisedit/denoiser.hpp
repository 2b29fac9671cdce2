#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "noisedit/container.hpp"
#include "noisedit/error.hpp"
#include "noisedit/latent.hpp"
#include "noisedit/schedule.hpp"

namespace noisedit {

inline constexpr std::size_t kDefaultConditionLength = 8;

/// Abstract prompt embedding consumed by a denoiser.
struct ConditioningVector {
  std::vector<double> values = std::vector<double>(kDefaultConditionLength, 0.0);

  /// Index of the largest coordinate (first one on ties).
  int condition_id() const {
    if (values.empty()) fail(ErrorCode::condition, "empty conditioning vector");
    return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
  }

  /// Vector whose argmax is `id`.
  static ConditioningVector one_hot(int id, std::size_t length = kDefaultConditionLength) {
    if (id < 0 || static_cast<std::size_t>(id) >= length) {
      fail(ErrorCode::condition, "condition id " + std::to_string(id) + " outside vector length");
    }
    ConditioningVector c{std::vector<double>(length, 0.0)};
    c.values[static_cast<std::size_t>(id)] = 1.0;
    return c;
  }

  friend bool operator==(const ConditioningVector&, const ConditioningVector&) = default;
};

/// Noise predictor eps(z, cond, i). Implementations must be deterministic
/// for the verification paths in this library.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual LatentVolume predict_noise(const LatentVolume& z, int step, const ConditioningVector& cond) const = 0;
};

class ZeroDenoiser final : public Denoiser {
 public:
  LatentVolume predict_noise(const LatentVolume& z, int, const ConditioningVector&) const override {
    return LatentVolume(z.shape());
  }
};

/// Always returns the same noise volume: the exact per-sample noise when it
/// is the draw used by forward_noise.
class FixedNoiseDenoiser final : public Denoiser {
 public:
  explicit FixedNoiseDenoiser(LatentVolume eps) : eps_(std::move(eps)) {}

  LatentVolume predict_noise(const LatentVolume& z, int, const ConditioningVector&) const override {
    if (z.shape() != eps_.shape()) fail(ErrorCode::dimension, "fixed-noise denoiser shape mismatch");
    return eps_;
  }

 private:
  LatentVolume eps_;
};

/// Closed-form data distribution: x0 ~ N(mean[c], sigma^2 I) per condition.
class GaussianWorld {
 public:
  GaussianWorld(std::map<int, LatentVolume> means, double sigma) : means_(std::move(means)), sigma_(sigma) {
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) fail(ErrorCode::domain, "world sigma must be > 0");
    if (means_.empty()) fail(ErrorCode::config, "world has no condition means");
    const Shape& s = means_.begin()->second.shape();
    for (const auto& [id, mu] : means_) {
      if (mu.shape() != s) fail(ErrorCode::dimension, "condition " + std::to_string(id) + " mean has a different shape");
    }
  }

  double sigma() const { return sigma_; }
  const Shape& shape() const { return means_.begin()->second.shape(); }
  const std::map<int, LatentVolume>& means() const { return means_; }

  const LatentVolume& mean(int condition_id) const {
    auto it = means_.find(condition_id);
    if (it == means_.end()) fail(ErrorCode::condition, "no mean registered for condition " + std::to_string(condition_id));
    return it->second;
  }

 private:
  std::map<int, LatentVolume> means_;
  double sigma_;
};

/// Reads "condition_id path" lines ('#' comments); relative paths resolve
/// against the manifest's directory.
inline GaussianWorld load_world(const std::filesystem::path& manifest, double sigma) {
  std::ifstream in(manifest);
  if (!in) fail(ErrorCode::io, "cannot open world manifest " + manifest.string());
  std::map<int, LatentVolume> means;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int id = 0;
    std::string path;
    if (!(ls >> id)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      fail(ErrorCode::config, manifest.string() + ":" + std::to_string(lineno) + ": expected 'condition_id path'");
    }
    if (!(ls >> path)) fail(ErrorCode::config, manifest.string() + ":" + std::to_string(lineno) + ": missing path");
    std::filesystem::path p(path);
    if (p.is_relative()) p = manifest.parent_path() / p;
    if (!means.emplace(id, read_latent(p)).second) {
      fail(ErrorCode::config, "condition " + std::to_string(id) + " registered twice");
    }
  }
  return GaussianWorld(std::move(means), sigma);
}

/// Posterior-mean noise E[eps | z_i] under the Gaussian world.
///
/// With z = sqrt(a) x0 + sqrt(1-a) eps and x0 ~ N(mu, s^2), z and eps are
/// jointly Gaussian with Cov(eps, z) = sqrt(1-a) and Var(z) = a s^2 + 1 - a:
///   E[eps | z] = sqrt(1-a) / (a s^2 + 1 - a) * (z - sqrt(a) mu).
class GaussianWorldDenoiser final : public Denoiser {
 public:
  GaussianWorldDenoiser(GaussianWorld world, NoiseSchedule schedule)
      : world_(std::move(world)), schedule_(std::move(schedule)) {}

  LatentVolume predict_noise(const LatentVolume& z, int step, const ConditioningVector& cond) const override {
    const LatentVolume& mu = world_.mean(cond.condition_id());
    if (z.shape() != mu.shape()) {
      fail(ErrorCode::dimension, "latent " + describe(z.shape()) + " vs world " + describe(mu.shape()));
    }
    const double a = schedule_.alpha_bar(step);
    const double s2 = world_.sigma() * world_.sigma();
    const double gain = std::sqrt(1.0 - a) / (a * s2 + 1.0 - a);
    const double sa = std::sqrt(a);
    LatentVolume eps(z.shape());
    for (std::size_t e = 0; e < z.size(); ++e) eps[e] = gain * (z[e] - sa * mu[e]);
    return eps;
  }

  const GaussianWorld& world() const { return world_; }
  const NoiseSchedule& schedule() const { return schedule_; }

 private:
  GaussianWorld world_;
  NoiseSchedule schedule_;
};

}  // namespace noisedit
