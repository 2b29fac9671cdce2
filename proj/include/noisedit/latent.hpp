#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "noisedit/error.hpp"

namespace noisedit {

/// Dimensions of a latent volume. Layout is frame-major, then channel, row,
/// column (column fastest).
struct Shape {
  std::size_t frames = 1;
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t plane() const { return height * width; }
  std::size_t size() const { return frames * channels * height * width; }
  bool valid() const { return frames >= 1 && channels >= 1 && height >= 1 && width >= 1; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Per-frame spatial dimensions shared by masks and coefficient fields.
struct PlaneShape {
  std::size_t frames = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t plane() const { return height * width; }
  std::size_t size() const { return frames * height * width; }
  bool valid() const { return frames >= 1 && height >= 1 && width >= 1; }

  friend bool operator==(const PlaneShape&, const PlaneShape&) = default;
};

inline PlaneShape plane_of(const Shape& s) { return {s.frames, s.height, s.width}; }

inline std::string describe(const Shape& s) {
  return std::to_string(s.frames) + "x" + std::to_string(s.channels) + "x" + std::to_string(s.height) +
         "x" + std::to_string(s.width);
}

inline std::string describe(const PlaneShape& s) {
  return std::to_string(s.frames) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

namespace detail {

inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::numerical, std::string(what) + " produced a non-finite value");
  }
}

}  // namespace detail

/// A 4-D field of 64-bit reals (frames x channels x height x width).
class LatentVolume {
 public:
  LatentVolume() = default;

  explicit LatentVolume(Shape shape, double fill = 0.0) : shape_(shape) {
    if (!shape_.valid()) fail(ErrorCode::dimension, "latent dims must be >= 1, got " + describe(shape_));
    values_.assign(shape_.size(), fill);
  }

  LatentVolume(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
    if (!shape_.valid()) fail(ErrorCode::dimension, "latent dims must be >= 1, got " + describe(shape_));
    if (values_.size() != shape_.size()) {
      fail(ErrorCode::dimension, "latent " + describe(shape_) + " expects " + std::to_string(shape_.size()) +
                                     " values, got " + std::to_string(values_.size()));
    }
    detail::require_finite(values_, "latent construction");
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::size_t index(std::size_t f, std::size_t c, std::size_t y, std::size_t x) const {
    return ((f * shape_.channels + c) * shape_.height + y) * shape_.width + x;
  }
  double at(std::size_t f, std::size_t c, std::size_t y, std::size_t x) const { return values_[index(f, c, y, x)]; }
  double& at(std::size_t f, std::size_t c, std::size_t y, std::size_t x) { return values_[index(f, c, y, x)]; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  friend bool operator==(const LatentVolume&, const LatentVolume&) = default;

 private:
  Shape shape_{};
  std::vector<double> values_;
};

/// Binary per-frame field; 1 marks the edited region.
class EditMask {
 public:
  EditMask() = default;

  explicit EditMask(PlaneShape shape, std::uint8_t fill = 0) : shape_(shape) {
    if (!shape_.valid()) fail(ErrorCode::dimension, "mask dims must be >= 1, got " + describe(shape_));
    if (fill > 1) fail(ErrorCode::domain, "mask values must be 0 or 1");
    values_.assign(shape_.size(), fill);
  }

  EditMask(PlaneShape shape, std::vector<std::uint8_t> values) : shape_(shape), values_(std::move(values)) {
    if (!shape_.valid()) fail(ErrorCode::dimension, "mask dims must be >= 1, got " + describe(shape_));
    if (values_.size() != shape_.size()) {
      fail(ErrorCode::dimension, "mask " + describe(shape_) + " expects " + std::to_string(shape_.size()) +
                                     " values, got " + std::to_string(values_.size()));
    }
    for (auto v : values_) {
      if (v > 1) fail(ErrorCode::domain, "mask values must be 0 or 1");
    }
  }

  const PlaneShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::span<const std::uint8_t> values() const { return values_; }

  bool at(std::size_t f, std::size_t y, std::size_t x) const {
    return values_[(f * shape_.height + y) * shape_.width + x] != 0;
  }
  void set(std::size_t f, std::size_t y, std::size_t x, bool on) {
    values_[(f * shape_.height + y) * shape_.width + x] = on ? 1 : 0;
  }

  std::size_t count() const { return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), 1)); }
  bool frame_empty(std::size_t f) const {
    auto first = values_.begin() + static_cast<std::ptrdiff_t>(f * shape_.plane());
    return std::none_of(first, first + static_cast<std::ptrdiff_t>(shape_.plane()), [](auto v) { return v != 0; });
  }

  friend bool operator==(const EditMask&, const EditMask&) = default;

 private:
  PlaneShape shape_{};
  std::vector<std::uint8_t> values_;
};

/// Real-valued per-frame weight field in [0, 1]; broadcasts across channels.
class CoefficientField {
 public:
  CoefficientField() = default;

  CoefficientField(PlaneShape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
    if (!shape_.valid() || values_.size() != shape_.size()) {
      fail(ErrorCode::dimension, "coefficient field " + describe(shape_) + " has " +
                                     std::to_string(values_.size()) + " values");
    }
    for (double v : values_) {
      if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::domain, "coefficient outside [0, 1]: " + std::to_string(v));
    }
  }

  static CoefficientField from_mask(const EditMask& mask) {
    std::vector<double> w(mask.values().begin(), mask.values().end());
    return {mask.shape(), std::move(w)};
  }

  const PlaneShape& shape() const { return shape_; }
  std::span<const double> values() const { return values_; }
  double at(std::size_t f, std::size_t y, std::size_t x) const {
    return values_[(f * shape_.height + y) * shape_.width + x];
  }

 private:
  PlaneShape shape_{};
  std::vector<double> values_;
};

namespace detail {

inline void require_same_shape(const LatentVolume& a, const LatentVolume& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorCode::dimension, std::string(op) + ": shape " + describe(a.shape()) + " vs " + describe(b.shape()));
  }
}

inline void require_plane_match(const Shape& latent, const PlaneShape& field, const char* op) {
  if (plane_of(latent) != field) {
    fail(ErrorCode::dimension,
         std::string(op) + ": field " + describe(field) + " does not match latent " + describe(latent));
  }
}

// Calls fn(element_index, plane_index) over the latent, where plane_index
// addresses the channel-free per-frame field.
template <typename Fn>
void for_each_broadcast(const Shape& s, Fn&& fn) {
  const std::size_t plane = s.plane();
  std::size_t e = 0;
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t c = 0; c < s.channels; ++c) {
      const std::size_t base = f * plane;
      for (std::size_t p = 0; p < plane; ++p, ++e) fn(e, base + p);
    }
  }
}

}  // namespace detail

/// w*a + (1-w)*b with one weight per frame pixel applied to every channel.
inline LatentVolume elementwise_lerp(const LatentVolume& a, const LatentVolume& b, const CoefficientField& w) {
  detail::require_same_shape(a, b, "elementwise_lerp");
  detail::require_plane_match(a.shape(), w.shape(), "elementwise_lerp");
  LatentVolume out(a.shape());
  auto wv = w.values();
  // Endpoint weights copy the operand so w = 1 / w = 0 regions are bit-exact.
  detail::for_each_broadcast(a.shape(), [&](std::size_t e, std::size_t p) {
    const double wp = wv[p];
    out[e] = wp == 1.0 ? a[e] : wp == 0.0 ? b[e] : wp * a[e] + (1.0 - wp) * b[e];
  });
  return out;
}

inline LatentVolume elementwise_lerp(const LatentVolume& a, const LatentVolume& b, double w) {
  detail::require_same_shape(a, b, "elementwise_lerp");
  if (!(w >= 0.0 && w <= 1.0)) fail(ErrorCode::domain, "lerp weight outside [0, 1]: " + std::to_string(w));
  LatentVolume out(a.shape());
  for (std::size_t e = 0; e < a.size(); ++e) out[e] = w * a[e] + (1.0 - w) * b[e];
  return out;
}

/// a where the mask is 1, b where it is 0. No arithmetic touches the values.
inline LatentVolume masked_select(const EditMask& keep_a, const LatentVolume& a, const LatentVolume& b) {
  detail::require_same_shape(a, b, "masked_select");
  detail::require_plane_match(a.shape(), keep_a.shape(), "masked_select");
  LatentVolume out(a.shape());
  auto m = keep_a.values();
  detail::for_each_broadcast(a.shape(), [&](std::size_t e, std::size_t p) { out[e] = m[p] ? a[e] : b[e]; });
  return out;
}

// Arithmetic helpers used by the samplers.

inline LatentVolume axpby(double alpha, const LatentVolume& x, double beta, const LatentVolume& y) {
  detail::require_same_shape(x, y, "axpby");
  LatentVolume out(x.shape());
  for (std::size_t e = 0; e < x.size(); ++e) out[e] = alpha * x[e] + beta * y[e];
  return out;
}

inline LatentVolume scaled(const LatentVolume& x, double alpha) {
  LatentVolume out(x.shape());
  for (std::size_t e = 0; e < x.size(); ++e) out[e] = alpha * x[e];
  return out;
}

inline double squared_norm(const LatentVolume& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return s;
}

/// ||a - b|| / ||b||.
inline double relative_l2(const LatentVolume& a, const LatentVolume& reference) {
  detail::require_same_shape(a, reference, "relative_l2");
  double num = 0.0;
  for (std::size_t e = 0; e < a.size(); ++e) {
    const double d = a[e] - reference[e];
    num += d * d;
  }
  const double den = squared_norm(reference);
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

struct VolumeStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

inline VolumeStats stats(std::span<const double> values) {
  VolumeStats s;
  if (values.empty()) return s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

}  // namespace noisedit
