#pragma once

// Edit configuration: plain-text "key = value" lines, '#' starts a comment,
// unknown or repeated keys are rejected.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "noisedit/error.hpp"
#include "noisedit/maskops.hpp"
#include "noisedit/ngm.hpp"
#include "noisedit/sampler.hpp"
#include "noisedit/schedule.hpp"
#include "noisedit/snis.hpp"

namespace noisedit {

struct EditConfig {
  int total_steps = 100;
  int tau = 5;
  double transition_width = 16.0;
  double alpha = 0.48;
  double beta = 0.85;
  /// Unset means total_steps - tau, so the random branch starts at pure noise.
  std::optional<int> t_start;
  std::uint64_t seed = 0;
  ScheduleKind schedule = ScheduleKind::linear;
  SamplerKind sampler = SamplerKind::ddim;
  InpaintMode inpaint = InpaintMode::none;
  std::size_t condition_length = kDefaultConditionLength;

  FarField far_field = FarField::zero_beyond_band;
  GuidanceAlignment ngm_alignment = GuidanceAlignment::post_step_level;
  InversionSource invert_source = InversionSource::original;
  int inversion_correctors = kDefaultInversionCorrectors;
  double inpaint_dilation = 2.0;
  std::string inpaint_url;
  /// Explicit [lo, hi] guidance steps; overrides alpha and beta.
  std::optional<std::pair<int, int>> window;
  /// Off disables the guidance window entirely.
  bool ngm = true;

  int resolved_t_start() const { return t_start.value_or(total_steps - tau); }

  void validate() const {
    if (total_steps < 1) fail(ErrorCode::config, "total_steps must be >= 1");
    if (tau < 0) fail(ErrorCode::config, "tau must be >= 0");
    if (resolved_t_start() < 0) fail(ErrorCode::config, "t_start must be >= 0");
    if (resolved_t_start() + tau > total_steps) fail(ErrorCode::config, "t_start + tau must not exceed total_steps");
    if (!(transition_width > 0.0)) fail(ErrorCode::config, "transition_width must be > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorCode::config, "alpha must lie in (0, 1]");
    if (!(beta > 0.0 && beta <= 1.0)) fail(ErrorCode::config, "beta must lie in (0, 1]");
    if (alpha > beta) fail(ErrorCode::config, "alpha must not exceed beta");
    if (condition_length < 1) fail(ErrorCode::config, "condition_length must be >= 1");
    if (inversion_correctors < 0) fail(ErrorCode::config, "inversion_correctors must be >= 0");
    if (!(inpaint_dilation >= 0.0)) fail(ErrorCode::config, "inpaint_dilation must be >= 0");
    if (window && (window->first < 0 || window->first > window->second || window->second > total_steps)) {
      fail(ErrorCode::config, "window must satisfy 0 <= lo <= hi <= total_steps");
    }
    if (window) GuidanceWindow::from_indices(window->first, window->second);
    else GuidanceWindow::from_fractions(alpha, beta, total_steps);
  }

  GuidanceWindow guidance_window() const {
    if (!ngm) return GuidanceWindow::disabled();
    if (window) return GuidanceWindow::from_indices(window->first, window->second);
    return GuidanceWindow::from_fractions(alpha, beta, total_steps);
  }

  SnisConfig snis() const {
    SnisConfig s;
    s.t_start = resolved_t_start();
    s.tau = tau;
    s.transition_width = transition_width;
    s.seed = seed;
    s.inpaint = inpaint;
    s.invert_source = invert_source;
    s.far_field = far_field;
    s.inpaint_dilation = inpaint_dilation;
    s.inversion_correctors = inversion_correctors;
    return s;
  }

  friend bool operator==(const EditConfig&, const EditConfig&) = default;
};

inline std::pair<int, int> parse_window(std::string_view text) {
  const auto colon = text.find(':');
  int lo = 0, hi = 0;
  auto parse = [&](std::string_view s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && !s.empty();
  };
  if (colon == std::string_view::npos || !parse(text.substr(0, colon), lo) || !parse(text.substr(colon + 1), hi)) {
    fail(ErrorCode::config, "window must look like lo:hi, got '" + std::string(text) + "'");
  }
  return {lo, hi};
}

namespace detail {

inline std::string_view trim_view(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size() || value.empty()) {
    fail(ErrorCode::config, "invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

inline void apply_config_entry(EditConfig& cfg, std::string_view key, std::string_view value) {
  using detail::parse_number;
  if (key == "total_steps") cfg.total_steps = parse_number<int>(key, value);
  else if (key == "tau") cfg.tau = parse_number<int>(key, value);
  else if (key == "transition_width") cfg.transition_width = parse_number<double>(key, value);
  else if (key == "alpha") cfg.alpha = parse_number<double>(key, value);
  else if (key == "beta") cfg.beta = parse_number<double>(key, value);
  else if (key == "t_start") cfg.t_start = parse_number<int>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "schedule") cfg.schedule = parse_schedule_kind(value);
  else if (key == "sampler") cfg.sampler = parse_sampler_kind(value);
  else if (key == "inpaint") cfg.inpaint = parse_inpaint_mode(value);
  else if (key == "condition_length") cfg.condition_length = parse_number<std::size_t>(key, value);
  else if (key == "coefficient_far_field") {
    if (value == "zero") cfg.far_field = FarField::zero_beyond_band;
    else if (value == "literal") cfg.far_field = FarField::literal_one_beyond_band;
    else fail(ErrorCode::config, "coefficient_far_field must be zero or literal");
  }
  else if (key == "ngm_alignment") cfg.ngm_alignment = parse_guidance_alignment(value);
  else if (key == "invert_source") cfg.invert_source = parse_inversion_source(value);
  else if (key == "inversion_correctors") cfg.inversion_correctors = parse_number<int>(key, value);
  else if (key == "inpaint_dilation") cfg.inpaint_dilation = parse_number<double>(key, value);
  else if (key == "inpaint_url") cfg.inpaint_url = std::string(value);
  else if (key == "window") cfg.window = parse_window(value);
  else if (key == "ngm") {
    if (value == "on") cfg.ngm = true;
    else if (value == "off") cfg.ngm = false;
    else fail(ErrorCode::config, "ngm must be on or off");
  }
  else fail(ErrorCode::config, "unknown config key '" + std::string(key) + "'");
}

/// Parses and validates; keys not present keep their defaults.
inline EditConfig parse_config(std::string_view text) {
  EditConfig cfg;
  std::map<std::string, int, std::less<>> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view l = line;
    if (auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = detail::trim_view(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::config, "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string_view key = detail::trim_view(l.substr(0, eq));
    const std::string_view value = detail::trim_view(l.substr(eq + 1));
    if (!seen.emplace(std::string(key), lineno).second) {
      fail(ErrorCode::config, "line " + std::to_string(lineno) + ": duplicate key '" + std::string(key) + "'");
    }
    try {
      apply_config_entry(cfg, key, value);
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(lineno) + ": " + e.detail());
    }
  }
  cfg.validate();
  return cfg;
}

inline EditConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Canonical text form; parse_config(to_text(c)) == c for validated configs
/// (t_start is written resolved).
inline std::string to_text(const EditConfig& c) {
  using detail::format_double;
  std::ostringstream os;
  os << "total_steps = " << c.total_steps << '\n'
     << "tau = " << c.tau << '\n'
     << "transition_width = " << format_double(c.transition_width) << '\n'
     << "alpha = " << format_double(c.alpha) << '\n'
     << "beta = " << format_double(c.beta) << '\n'
     << "t_start = " << c.resolved_t_start() << '\n'
     << "seed = " << c.seed << '\n'
     << "schedule = " << to_string(c.schedule) << '\n'
     << "sampler = " << to_string(c.sampler) << '\n'
     << "inpaint = " << to_string(c.inpaint) << '\n'
     << "condition_length = " << c.condition_length << '\n'
     << "coefficient_far_field = " << (c.far_field == FarField::zero_beyond_band ? "zero" : "literal") << '\n'
     << "ngm_alignment = " << to_string(c.ngm_alignment) << '\n'
     << "invert_source = " << to_string(c.invert_source) << '\n'
     << "inversion_correctors = " << c.inversion_correctors << '\n'
     << "inpaint_dilation = " << format_double(c.inpaint_dilation) << '\n';
  if (!c.inpaint_url.empty()) os << "inpaint_url = " << c.inpaint_url << '\n';
  if (!c.ngm) os << "ngm = off\n";
  if (c.window) os << "window = " << c.window->first << ':' << c.window->second << '\n';
  return os.str();
}

}  // namespace noisedit
