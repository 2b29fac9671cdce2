#pragma once

// LATF binary container.
//
//   offset  size  field
//   0       4     magic "LATF"
//   4       4     version (u32 LE, = 1)
//   8       4     kind (u32 LE, 0 = latent, 1 = mask / per-frame field)
//   12      16    frames, channels, height, width (u32 LE each)
//   28      4*N   IEEE-754 binary32 LE values, frame-major layout
//
// Values are stored at 32-bit precision; everything in memory is 64-bit.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "noisedit/error.hpp"
#include "noisedit/latent.hpp"

namespace noisedit {

enum class ContainerKind : std::uint32_t { latent = 0, mask = 1 };

inline constexpr std::array<char, 4> kContainerMagic{'L', 'A', 'T', 'F'};
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 28;

/// Decoded container contents before interpretation as a latent or mask.
struct Container {
  ContainerKind kind = ContainerKind::latent;
  Shape shape{};
  std::vector<float> values;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

inline std::uint32_t checked_dim(std::size_t d, const char* name) {
  if (d == 0 || d > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::format, std::string("dimension ") + name + " not representable: " + std::to_string(d));
  }
  return static_cast<std::uint32_t>(d);
}

}  // namespace detail

inline std::string encode_container(const Container& c) {
  if (c.values.size() != c.shape.size()) {
    fail(ErrorCode::dimension, "container payload has " + std::to_string(c.values.size()) + " values for " +
                                   describe(c.shape));
  }
  std::string out;
  out.reserve(kContainerHeaderBytes + 4 * c.values.size());
  out.append(kContainerMagic.data(), kContainerMagic.size());
  detail::put_u32(out, kContainerVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(c.kind));
  detail::put_u32(out, detail::checked_dim(c.shape.frames, "frames"));
  detail::put_u32(out, detail::checked_dim(c.shape.channels, "channels"));
  detail::put_u32(out, detail::checked_dim(c.shape.height, "height"));
  detail::put_u32(out, detail::checked_dim(c.shape.width, "width"));
  for (float v : c.values) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

/// Decodes one container starting at `offset` and advances it past the payload.
inline Container decode_container_at(std::string_view bytes, std::size_t& offset) {
  if (bytes.size() - offset < kContainerHeaderBytes) {
    fail(ErrorCode::length, "container header truncated: " + std::to_string(bytes.size() - offset) + " bytes");
  }
  if (std::memcmp(bytes.data() + offset, kContainerMagic.data(), 4) != 0) fail(ErrorCode::format, "bad magic");
  const std::uint32_t version = detail::get_u32(bytes, offset + 4);
  if (version != kContainerVersion) fail(ErrorCode::format, "unsupported version " + std::to_string(version));
  const std::uint32_t kind = detail::get_u32(bytes, offset + 8);
  if (kind > 1) fail(ErrorCode::format, "unknown kind " + std::to_string(kind));

  Container c;
  c.kind = static_cast<ContainerKind>(kind);
  c.shape = Shape{detail::get_u32(bytes, offset + 12), detail::get_u32(bytes, offset + 16),
                  detail::get_u32(bytes, offset + 20), detail::get_u32(bytes, offset + 24)};
  if (!c.shape.valid()) fail(ErrorCode::format, "zero dimension in header " + describe(c.shape));
  if (c.kind == ContainerKind::mask && c.shape.channels != 1) {
    fail(ErrorCode::format, "mask containers must have channels = 1, got " + std::to_string(c.shape.channels));
  }
  offset += kContainerHeaderBytes;

  // Compare against the available byte count before multiplying out the dims.
  const std::size_t available = (bytes.size() - offset) / 4;
  std::size_t expected = 1;
  for (std::size_t d : {c.shape.frames, c.shape.channels, c.shape.height, c.shape.width}) {
    if (d > available / expected) {
      fail(ErrorCode::length, "payload truncated: header " + describe(c.shape) + " expects " +
                                  std::to_string(c.shape.size()) + " values, found " + std::to_string(available));
    }
    expected *= d;
  }

  c.values.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    c.values[i] = std::bit_cast<float>(detail::get_u32(bytes, offset + 4 * i));
    if (!std::isfinite(c.values[i])) fail(ErrorCode::format, "non-finite value at index " + std::to_string(i));
    if (c.kind == ContainerKind::mask && (c.values[i] < 0.0f || c.values[i] > 1.0f)) {
      fail(ErrorCode::format, "mask value outside [0, 1] at index " + std::to_string(i));
    }
  }
  offset += 4 * expected;
  return c;
}

inline Container decode_container(std::string_view bytes) {
  std::size_t offset = 0;
  Container c = decode_container_at(bytes, offset);
  if (offset != bytes.size()) {
    fail(ErrorCode::format, std::to_string(bytes.size() - offset) + " trailing bytes after payload");
  }
  return c;
}

// Conversions between containers and in-memory types.

inline Container to_container(const LatentVolume& v) {
  Container c{ContainerKind::latent, v.shape(), {}};
  c.values.reserve(v.size());
  for (double x : v.values()) c.values.push_back(static_cast<float>(x));
  return c;
}

inline Container to_container(const EditMask& m) {
  const auto& s = m.shape();
  Container c{ContainerKind::mask, Shape{s.frames, 1, s.height, s.width}, {}};
  c.values.reserve(m.size());
  for (auto x : m.values()) c.values.push_back(static_cast<float>(x));
  return c;
}

inline Container to_container(const CoefficientField& w) {
  const auto& s = w.shape();
  Container c{ContainerKind::mask, Shape{s.frames, 1, s.height, s.width}, {}};
  c.values.reserve(s.size());
  for (double x : w.values()) c.values.push_back(static_cast<float>(x));
  return c;
}

inline LatentVolume latent_from(const Container& c) {
  if (c.kind != ContainerKind::latent) fail(ErrorCode::format, "expected a latent container (kind 0)");
  return LatentVolume(c.shape, std::vector<double>(c.values.begin(), c.values.end()));
}

/// Binarizes at 0.5.
inline EditMask mask_from(const Container& c) {
  if (c.kind != ContainerKind::mask) fail(ErrorCode::format, "expected a mask container (kind 1)");
  std::vector<std::uint8_t> bits;
  bits.reserve(c.values.size());
  for (float v : c.values) bits.push_back(v >= 0.5f ? 1 : 0);
  return EditMask(PlaneShape{c.shape.frames, c.shape.height, c.shape.width}, std::move(bits));
}

/// Raw per-frame field (no binarization).
inline CoefficientField field_from(const Container& c) {
  if (c.kind != ContainerKind::mask) fail(ErrorCode::format, "expected a field container (kind 1)");
  return CoefficientField(PlaneShape{c.shape.frames, c.shape.height, c.shape.width},
                          std::vector<double>(c.values.begin(), c.values.end()));
}

// File I/O.

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

using Volume = std::variant<LatentVolume, EditMask>;

inline Volume read_volume(const std::filesystem::path& path) {
  Container c = decode_container(read_file_bytes(path));
  if (c.kind == ContainerKind::mask) return mask_from(c);
  return latent_from(c);
}

inline LatentVolume read_latent(const std::filesystem::path& path) {
  return latent_from(decode_container(read_file_bytes(path)));
}

inline EditMask read_mask(const std::filesystem::path& path) {
  return mask_from(decode_container(read_file_bytes(path)));
}

inline void write_volume(const std::filesystem::path& path, const LatentVolume& v) {
  write_file_bytes(path, encode_container(to_container(v)));
}

inline void write_volume(const std::filesystem::path& path, const EditMask& m) {
  write_file_bytes(path, encode_container(to_container(m)));
}

inline void write_volume(const std::filesystem::path& path, const CoefficientField& w) {
  write_file_bytes(path, encode_container(to_container(w)));
}

}  // namespace noisedit
