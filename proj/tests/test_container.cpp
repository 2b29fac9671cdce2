#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <limits>

#include "noisedit/container.hpp"
#include "support.hpp"

using namespace noisedit;

namespace {

// Hand-rolled writer so the tests do not lean on encode_container.
std::string raw(const char* magic, std::uint32_t version, std::uint32_t kind, std::uint32_t f, std::uint32_t c,
                std::uint32_t h, std::uint32_t w, const std::vector<float>& payload) {
  std::string out(magic, 4);
  for (std::uint32_t v : {version, kind, f, c, h, w}) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
  for (float x : payload) {
    const auto u = std::bit_cast<std::uint32_t>(x);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
  }
  return out;
}

ErrorCode code_of(const std::string& bytes) {
  try {
    decode_container(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode accepted malformed input";
  return ErrorCode::numerical;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("noisedit_test_" + name);
}

}  // namespace

TEST(Container, HeaderLayoutIsLittleEndian) {
  const std::string bytes = encode_container(Container{ContainerKind::latent, Shape{2, 3, 4, 5}, std::vector<float>(120, 1.5f)});
  ASSERT_EQ(bytes.size(), 28u + 120u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "LATF");
  EXPECT_EQ(bytes, raw("LATF", 1, 0, 2, 3, 4, 5, std::vector<float>(120, 1.5f)));
}

TEST(Container, LatentRoundTripIsBitExact) {
  const auto v = testing_support::random_volume(Shape{2, 3, 7, 5}, 42);
  // Storage is float32; values representable in float survive exactly.
  std::vector<double> as_float;
  for (double x : v.values()) as_float.push_back(static_cast<float>(x));
  const LatentVolume exact(v.shape(), as_float);
  const auto path = temp_path("roundtrip.latf");
  write_volume(path, exact);
  EXPECT_EQ(read_latent(path), exact);
  std::filesystem::remove(path);
}

TEST(Container, MaskRoundTripIsBitExact) {
  const auto m = testing_support::random_mask(PlaneShape{3, 6, 9}, 5);
  const auto path = temp_path("mask.latf");
  write_volume(path, m);
  EXPECT_EQ(read_mask(path), m);
  const Volume v = read_volume(path);
  ASSERT_TRUE(std::holds_alternative<EditMask>(v));
  std::filesystem::remove(path);
}

TEST(Container, MaskBinarizesAtHalf) {
  const auto m = mask_from(decode_container(raw("LATF", 1, 1, 1, 1, 1, 4, {0.0f, 0.49f, 0.5f, 1.0f})));
  EXPECT_EQ(m.values()[1], 0);
  EXPECT_EQ(m.values()[2], 1);
}

TEST(Container, MalformedCorpus) {
  const std::vector<float> ok16(16, 0.0f);
  EXPECT_EQ(code_of(raw("LATF", 1, 0, 1, 1, 4, 4, ok16).substr(0, 20)), ErrorCode::length);
  EXPECT_EQ(code_of(raw("LATG", 1, 0, 1, 1, 4, 4, ok16)), ErrorCode::format);
  EXPECT_EQ(code_of(raw("LATF", 2, 0, 1, 1, 4, 4, ok16)), ErrorCode::format);
  EXPECT_EQ(code_of(raw("LATF", 1, 7, 1, 1, 4, 4, ok16)), ErrorCode::format);
  EXPECT_EQ(code_of(raw("LATF", 1, 0, 0, 1, 4, 4, {})), ErrorCode::format);
  EXPECT_EQ(code_of(raw("LATF", 1, 1, 1, 2, 2, 4, ok16)), ErrorCode::format);
  EXPECT_EQ(code_of(raw("LATF", 1, 0, 2, 1, 4, 4, std::vector<float>(31, 0.0f))), ErrorCode::length);
  EXPECT_EQ(code_of(raw("LATF", 1, 0, 1, 1, 4, 4, ok16) + "xx"), ErrorCode::format);
  const std::uint32_t big = std::numeric_limits<std::uint32_t>::max();
  EXPECT_EQ(code_of(raw("LATF", 1, 0, big, big, big, big, ok16)), ErrorCode::length);
  std::vector<float> nan16 = ok16;
  nan16[3] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_EQ(code_of(raw("LATF", 1, 0, 1, 1, 4, 4, nan16)), ErrorCode::format);
  std::vector<float> two16 = ok16;
  two16[0] = 2.0f;
  EXPECT_EQ(code_of(raw("LATF", 1, 1, 1, 1, 4, 4, two16)), ErrorCode::format);
  EXPECT_EQ(code_of(""), ErrorCode::length);
}

TEST(Container, KindMismatch) {
  const std::string latent = raw("LATF", 1, 0, 1, 1, 1, 1, {0.5f});
  EXPECT_THROW(mask_from(decode_container(latent)), Error);
  const std::string mask = raw("LATF", 1, 1, 1, 1, 1, 1, {1.0f});
  EXPECT_THROW(latent_from(decode_container(mask)), Error);
}

TEST(Container, MissingFileIsIoError) {
  try {
    read_latent("/nonexistent/dir/x.latf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io);
  }
}

TEST(Container, ConcatenatedContainers) {
  const std::string a = raw("LATF", 1, 0, 1, 1, 1, 2, {1.0f, 2.0f});
  const std::string b = raw("LATF", 1, 1, 1, 1, 1, 1, {1.0f});
  const std::string both = a + b;
  std::size_t offset = 0;
  EXPECT_EQ(decode_container_at(both, offset).values, (std::vector<float>{1.0f, 2.0f}));
  EXPECT_EQ(offset, a.size());
  EXPECT_EQ(decode_container_at(both, offset).kind, ContainerKind::mask);
  EXPECT_EQ(offset, both.size());
}
