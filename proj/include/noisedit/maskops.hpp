#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "noisedit/error.hpp"
#include "noisedit/latent.hpp"

namespace noisedit {

/// Per-frame Euclidean distance (latent-pixel units) to the nearest mask
/// pixel. Frames without any mask pixel are flagged empty and hold +inf.
class DistanceField {
 public:
  DistanceField(PlaneShape shape, std::vector<double> distances, std::vector<bool> empty_frames)
      : shape_(shape), distances_(std::move(distances)), empty_(std::move(empty_frames)) {
    if (distances_.size() != shape_.size() || empty_.size() != shape_.frames) {
      fail(ErrorCode::dimension, "distance field storage does not match " + describe(shape_));
    }
  }

  const PlaneShape& shape() const { return shape_; }
  std::span<const double> values() const { return distances_; }
  double at(std::size_t f, std::size_t y, std::size_t x) const {
    return distances_[(f * shape_.height + y) * shape_.width + x];
  }
  bool frame_empty(std::size_t f) const { return empty_[f]; }

 private:
  PlaneShape shape_;
  std::vector<double> distances_;
  std::vector<bool> empty_;
};

namespace detail {

// Squared distance transform of a sampled function along one line
// (lower envelope of parabolas rooted at each sample).
inline void squared_dt_1d(std::span<const double> f, std::span<double> out, std::vector<std::size_t>& v,
                          std::vector<double>& z) {
  const std::size_t n = f.size();
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  z[0] = -inf;
  z[1] = inf;
  auto intersect = [&](std::size_t q, std::size_t p) {
    const double dq = double(q), dp = double(p);
    return ((f[q] + dq * dq) - (f[p] + dp * dp)) / (2.0 * dq - 2.0 * dp);
  };
  for (std::size_t q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    // z[0] = -inf and all f are finite, so this stops at k = 0.
    while (s <= z[k]) s = intersect(q, v[--k]);
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < double(q)) ++k;
    const double d = double(q) - double(v[k]);
    out[q] = d * d + f[v[k]];
  }
}

}  // namespace detail

/// Exact 2-D Euclidean distance transform per frame, separable two-pass
/// lower-envelope method, O(height * width) per frame.
inline DistanceField distance_transform(const EditMask& mask) {
  const PlaneShape& s = mask.shape();
  // Large finite sentinel keeps the envelope arithmetic free of inf - inf.
  constexpr double far = 1e20;
  std::vector<double> dist(s.size());
  std::vector<bool> empty(s.frames, false);
  std::vector<double> line_in, line_out, z;
  std::vector<std::size_t> v;
  std::vector<double> plane(s.plane());

  for (std::size_t f = 0; f < s.frames; ++f) {
    if (mask.frame_empty(f)) {
      empty[f] = true;
      std::fill_n(dist.begin() + static_cast<std::ptrdiff_t>(f * s.plane()), s.plane(),
                  std::numeric_limits<double>::infinity());
      continue;
    }
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) plane[y * s.width + x] = mask.at(f, y, x) ? 0.0 : far;
    }
    // Columns.
    line_in.resize(s.height);
    line_out.resize(s.height);
    for (std::size_t x = 0; x < s.width; ++x) {
      for (std::size_t y = 0; y < s.height; ++y) line_in[y] = plane[y * s.width + x];
      detail::squared_dt_1d(line_in, line_out, v, z);
      for (std::size_t y = 0; y < s.height; ++y) plane[y * s.width + x] = line_out[y];
    }
    // Rows.
    line_in.resize(s.width);
    line_out.resize(s.width);
    for (std::size_t y = 0; y < s.height; ++y) {
      std::copy_n(plane.begin() + static_cast<std::ptrdiff_t>(y * s.width), s.width, line_in.begin());
      detail::squared_dt_1d(line_in, line_out, v, z);
      for (std::size_t x = 0; x < s.width; ++x) dist[f * s.plane() + y * s.width + x] = std::sqrt(line_out[x]);
    }
  }
  return DistanceField(s, std::move(dist), std::move(empty));
}

/// How D(d) behaves for d > m. `zero_beyond_band` keeps the far background
/// on the inversion branch; `literal_one_beyond_band` reproduces the
/// printed "otherwise -> 1" branch for comparison runs.
enum class FarField { zero_beyond_band, literal_one_beyond_band };

/// D = max(m - d, 0) / m inside the band [0, m]; 0 beyond (or 1 in literal
/// mode). Empty frames are 0 everywhere.
inline CoefficientField coefficient_field(const DistanceField& dist, double m,
                                          FarField far_field = FarField::zero_beyond_band) {
  if (!(m > 0.0) || !std::isfinite(m)) fail(ErrorCode::domain, "transition width must be > 0, got " + std::to_string(m));
  const PlaneShape& s = dist.shape();
  std::vector<double> w(s.size(), 0.0);
  for (std::size_t f = 0; f < s.frames; ++f) {
    if (dist.frame_empty(f)) continue;
    for (std::size_t p = 0; p < s.plane(); ++p) {
      const double d = dist.values()[f * s.plane() + p];
      if (d <= m) {
        w[f * s.plane() + p] = std::max(m - d, 0.0) / m;
      } else if (far_field == FarField::literal_one_beyond_band) {
        w[f * s.plane() + p] = 1.0;
      }
    }
  }
  return CoefficientField(s, std::move(w));
}

inline CoefficientField coefficient_field(const EditMask& mask, double m,
                                          FarField far_field = FarField::zero_beyond_band) {
  return coefficient_field(distance_transform(mask), m, far_field);
}

/// Mask grown to every pixel within `radius` of the edited region.
inline EditMask dilate(const EditMask& mask, double radius) {
  if (!(radius >= 0.0) || std::isnan(radius)) fail(ErrorCode::domain, "dilation radius must be >= 0");
  const DistanceField dist = distance_transform(mask);
  std::vector<std::uint8_t> out(mask.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dist.values()[i] <= radius ? 1 : 0;
  return EditMask(mask.shape(), std::move(out));
}

}  // namespace noisedit
