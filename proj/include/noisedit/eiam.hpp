#pragma once

// Edit instruction analysis as service contracts.
//
//   POST /caption  {video_ref}                   -> {prompt}
//   POST /reason   {source_prompt, instruction}  -> {target_prompt, objects}
//   POST /segment  {video_ref, objects}          -> LATF container (kind 1)
//   POST /inpaint  {latent, mask} (base64 LATF)  -> LATF container (kind 0)
//
// Endpoints come from EIAM_CAPTION_URL, EIAM_REASON_URL, EIAM_SEGMENT_URL
// (and EIAM_INPAINT_URL). Error responses carry {"error", "kind"}.

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "noisedit/base64.hpp"
#include "noisedit/container.hpp"
#include "noisedit/denoiser.hpp"
#include "noisedit/error.hpp"
#include "noisedit/latent.hpp"
#include "noisedit/snis.hpp"

namespace noisedit::eiam {

using nlohmann::json;

enum class TaskKind { removal, replacement, attribute };

inline std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::removal: return "removal";
    case TaskKind::replacement: return "replacement";
    case TaskKind::attribute: return "attribute";
  }
  return "replacement";
}

struct PromptPair {
  std::string source_prompt;
  std::string target_prompt;
  std::vector<std::string> objects;

  friend bool operator==(const PromptPair&, const PromptPair&) = default;
};

/// A parsed edit instruction.
struct Instruction {
  std::string text;
  TaskKind kind = TaskKind::replacement;
  std::string object;
  std::string replacement;  ///< new object (replacement) or attribute word(s)
};

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n.");
  return s.substr(b, e - b + 1);
}

inline std::string collapse_spaces(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ') {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

inline std::string article_for(const std::string& word) {
  return (!word.empty() && std::string("aeiou").find(static_cast<char>(std::tolower(
                                static_cast<unsigned char>(word[0])))) != std::string::npos)
             ? "an"
             : "a";
}

inline std::string regex_escape(const std::string& s) {
  static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
  return std::regex_replace(s, special, R"(\$&)");
}

}  // namespace detail

/// Recognizes "replace the X with a Y", "remove the X" and "make the X Y".
inline Instruction parse_instruction(const std::string& text) {
  const std::string t = detail::trim(text);
  if (t.empty()) fail(ErrorCode::analysis, "empty instruction");
  const auto icase = std::regex::icase;
  static const std::regex replace_re(R"(^replace\s+(?:the\s+|a\s+|an\s+)?(.+?)\s+with\s+(?:the\s+|a\s+|an\s+)?(.+)$)",
                                     icase);
  static const std::regex remove_re(R"(^(?:remove|delete|erase)\s+(?:the\s+|a\s+|an\s+)?(.+)$)", icase);
  static const std::regex attribute_re(R"(^(?:make|turn)\s+(?:the\s+|a\s+|an\s+)?(\S+)\s+(.+)$)", icase);
  std::smatch m;
  Instruction ins{text, TaskKind::replacement, {}, {}};
  if (std::regex_match(t, m, replace_re)) {
    ins.kind = TaskKind::replacement;
    ins.object = m[1];
    ins.replacement = m[2];
  } else if (std::regex_match(t, m, remove_re)) {
    ins.kind = TaskKind::removal;
    ins.object = m[1];
  } else if (std::regex_match(t, m, attribute_re)) {
    ins.kind = TaskKind::attribute;
    ins.object = m[1];
    ins.replacement = m[2];
  } else {
    fail(ErrorCode::analysis, "cannot extract an edit object from '" + text + "'");
  }
  ins.object = detail::lower(detail::trim(ins.object));
  ins.replacement = detail::trim(ins.replacement);
  if (ins.object.empty()) fail(ErrorCode::analysis, "empty object in '" + text + "'");
  return ins;
}

/// Deterministic template rewrite of the source prompt.
inline PromptPair derive_target_by_template(const std::string& source_prompt, const std::string& instruction) {
  const Instruction ins = parse_instruction(instruction);
  const std::string obj = detail::regex_escape(ins.object);
  const std::regex phrase(R"((?:\b(?:a|an|the)\s+)?\b)" + obj + R"(\b)", std::regex::icase);
  if (!std::regex_search(source_prompt, phrase)) {
    fail(ErrorCode::analysis, "object '" + ins.object + "' does not appear in the source prompt");
  }
  std::string target;
  switch (ins.kind) {
    case TaskKind::replacement:
      target = std::regex_replace(source_prompt, phrase, detail::article_for(ins.replacement) + " " + ins.replacement,
                                  std::regex_constants::format_first_only);
      break;
    case TaskKind::attribute:
      target = std::regex_replace(source_prompt, phrase,
                                  detail::article_for(ins.replacement) + " " + ins.replacement + " " + ins.object,
                                  std::regex_constants::format_first_only);
      break;
    case TaskKind::removal: {
      const std::regex with_phrase(R"((?:\bwith\s+)?(?:\b(?:a|an|the)\s+)?\b)" + obj + R"(\b)", std::regex::icase);
      target = std::regex_replace(source_prompt, with_phrase, "", std::regex_constants::format_first_only);
      break;
    }
  }
  return PromptPair{source_prompt, detail::collapse_spaces(target), {ins.object}};
}

/// One-hot stand-in for a text encoder: the FNV-1a hash of the lowercase
/// alphanumeric tokens (single-space joined) picks the active coordinate, so
/// prompts differing only in case or punctuation share a condition. Text
/// without tokens maps to the zero vector.
inline ConditioningVector embed_prompt(const std::string& text, std::size_t length = kDefaultConditionLength) {
  if (length == 0) fail(ErrorCode::config, "condition length must be >= 1");
  std::string normalized;
  bool gap = false;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (gap && !normalized.empty()) normalized.push_back(' ');
      normalized.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      gap = false;
    } else {
      gap = true;
    }
  }
  if (normalized.empty()) return ConditioningVector{std::vector<double>(length, 0.0)};
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : normalized) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return ConditioningVector::one_hot(static_cast<int>(h % length), length);
}

/// Caption / reasoning / segmentation backend.
class InstructionAnalyzer {
 public:
  virtual ~InstructionAnalyzer() = default;
  virtual std::string describe_source(const std::string& video_ref) const = 0;
  virtual PromptPair derive_target(const std::string& source_prompt, const std::string& instruction) const = 0;
  virtual EditMask segment_objects(const std::string& video_ref, const std::vector<std::string>& objects) const = 0;
};

/// Fixture-backed responses. The fixture directory holds manifest.json:
///   {"captions": {video_ref: prompt},
///    "masks": {video_ref: {object: "relative/path.latf"}}}
class MockBackend final : public InstructionAnalyzer {
 public:
  explicit MockBackend(const std::filesystem::path& fixtures_dir) {
    const auto manifest_path = fixtures_dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) fail(ErrorCode::io, "cannot open " + manifest_path.string());
    json doc;
    try {
      doc = json::parse(in);
      for (const auto& [ref, prompt] : doc.at("captions").items()) captions_[ref] = prompt.get<std::string>();
      for (const auto& [ref, objects] : doc.at("masks").items()) {
        for (const auto& [object, path] : objects.items()) {
          masks_[ref].emplace(object, read_mask(fixtures_dir / path.get<std::string>()));
        }
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::format, manifest_path.string() + ": " + e.what());
    }
  }

  std::string describe_source(const std::string& video_ref) const override {
    auto it = captions_.find(video_ref);
    if (it == captions_.end()) fail(ErrorCode::analysis, "no caption fixture for '" + video_ref + "'");
    return it->second;
  }

  PromptPair derive_target(const std::string& source_prompt, const std::string& instruction) const override {
    return derive_target_by_template(source_prompt, instruction);
  }

  /// Union of the per-object fixture masks.
  EditMask segment_objects(const std::string& video_ref, const std::vector<std::string>& objects) const override {
    if (objects.empty()) fail(ErrorCode::segmentation, "no objects to segment");
    auto ref = masks_.find(video_ref);
    if (ref == masks_.end()) fail(ErrorCode::segmentation, "no mask fixtures for '" + video_ref + "'");
    std::optional<EditMask> out;
    for (const auto& object : objects) {
      auto it = ref->second.find(object);
      if (it == ref->second.end()) {
        fail(ErrorCode::segmentation, "object '" + object + "' not found in '" + video_ref + "'");
      }
      if (!out) {
        out = it->second;
        continue;
      }
      if (out->shape() != it->second.shape()) fail(ErrorCode::dimension, "fixture masks disagree on shape");
      for (std::size_t i = 0; i < out->size(); ++i) {
        if (it->second.values()[i]) {
          const auto& s = out->shape();
          out->set(i / s.plane(), (i % s.plane()) / s.width, i % s.width, true);
        }
      }
    }
    return *out;
  }

 private:
  std::map<std::string, std::string> captions_;
  std::map<std::string, std::map<std::string, EditMask>> masks_;
};

/// User-supplied prompts and mask; no service involved.
class ManualAnalyzer final : public InstructionAnalyzer {
 public:
  ManualAnalyzer(std::string source_prompt, std::string target_prompt, EditMask mask,
                 std::vector<std::string> objects = {})
      : prompts_{std::move(source_prompt), std::move(target_prompt), std::move(objects)}, mask_(std::move(mask)) {}

  std::string describe_source(const std::string&) const override { return prompts_.source_prompt; }
  PromptPair derive_target(const std::string&, const std::string&) const override { return prompts_; }
  EditMask segment_objects(const std::string&, const std::vector<std::string>&) const override { return mask_; }

 private:
  PromptPair prompts_;
  EditMask mask_;
};

// HTTP transport.

struct Endpoint {
  std::string base;  ///< scheme://host[:port]
  std::string path;

  std::string url() const { return base + path; }
};

inline Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) fail(ErrorCode::config, "unsupported endpoint URL '" + url + "'");
  return Endpoint{m[1], m[2].matched ? std::string(m[2]) : std::string("/")};
}

struct ClientOptions {
  std::chrono::seconds timeout{30};
  int retries = 1;  ///< extra attempts after a transport failure
};

/// POSTs `body` and returns the 200 response body. Transport failures are
/// retried; non-200 responses map their {"kind"} onto the error code.
inline std::string post(const Endpoint& ep, const std::string& body, const std::string& content_type,
                        const ClientOptions& opts = {}) {
  httplib::Client client(ep.base);
  client.set_connection_timeout(opts.timeout);
  client.set_read_timeout(opts.timeout);
  client.set_write_timeout(opts.timeout);
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(ep.path, body, content_type);
    if (!res) {
      if (attempt < opts.retries) continue;
      fail(ErrorCode::transport, "cannot reach " + ep.url() + " (" + httplib::to_string(res.error()) + ")");
    }
    if (res->status == 200) return res->body;
    ErrorCode code = ErrorCode::protocol;
    std::string message = "HTTP " + std::to_string(res->status) + " from " + ep.url();
    try {
      const json err = json::parse(res->body);
      const std::string kind = err.value("kind", "");
      if (kind == "segmentation") code = ErrorCode::segmentation;
      if (kind == "analysis") code = ErrorCode::analysis;
      message += ": " + err.value("error", "");
    } catch (const json::exception&) {
    }
    fail(code, message);
  }
}

inline json post_json(const Endpoint& ep, const json& request, const ClientOptions& opts = {}) {
  const std::string body = post(ep, request.dump(), "application/json", opts);
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    fail(ErrorCode::protocol, "malformed JSON from " + ep.url() + ": " + e.what());
  }
}

struct ServiceEndpoints {
  std::string caption_url;
  std::string reason_url;
  std::string segment_url;

  static ServiceEndpoints from_env() {
    auto get = [](const char* name) {
      const char* v = std::getenv(name);
      if (!v || !*v) fail(ErrorCode::config, std::string(name) + " is not set");
      return std::string(v);
    };
    return {get("EIAM_CAPTION_URL"), get("EIAM_REASON_URL"), get("EIAM_SEGMENT_URL")};
  }
};

/// Strict decode of a segmentation response: values must be exactly 0 or 1.
inline EditMask decode_mask_response(const std::string& body, const std::string& from) {
  Container c;
  try {
    c = decode_container(body);
  } catch (const Error& e) {
    fail(ErrorCode::protocol, "bad mask container from " + from + ": " + e.detail());
  }
  if (c.kind != ContainerKind::mask) fail(ErrorCode::protocol, "segmentation response from " + from + " is not a mask");
  for (float v : c.values) {
    if (v != 0.0f && v != 1.0f) fail(ErrorCode::protocol, "segmentation response from " + from + " is not binary");
  }
  return mask_from(c);
}

class HttpAnalyzer final : public InstructionAnalyzer {
 public:
  explicit HttpAnalyzer(const ServiceEndpoints& endpoints, ClientOptions opts = {})
      : caption_(parse_endpoint(endpoints.caption_url)),
        reason_(parse_endpoint(endpoints.reason_url)),
        segment_(parse_endpoint(endpoints.segment_url)),
        opts_(opts) {}

  std::string describe_source(const std::string& video_ref) const override {
    const json res = post_json(caption_, {{"video_ref", video_ref}}, opts_);
    if (!res.contains("prompt") || !res["prompt"].is_string() || res["prompt"].get<std::string>().empty()) {
      fail(ErrorCode::protocol, caption_.url() + " response lacks a non-empty 'prompt'");
    }
    return res["prompt"].get<std::string>();
  }

  PromptPair derive_target(const std::string& source_prompt, const std::string& instruction) const override {
    if (detail::trim(instruction).empty()) fail(ErrorCode::analysis, "empty instruction");
    const json res = post_json(reason_, {{"source_prompt", source_prompt}, {"instruction", instruction}}, opts_);
    PromptPair out{source_prompt, {}, {}};
    try {
      out.target_prompt = res.at("target_prompt").get<std::string>();
      out.objects = res.at("objects").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      fail(ErrorCode::protocol, reason_.url() + " response schema: " + e.what());
    }
    if (out.objects.empty()) fail(ErrorCode::analysis, "no edit objects extracted from '" + instruction + "'");
    return out;
  }

  EditMask segment_objects(const std::string& video_ref, const std::vector<std::string>& objects) const override {
    const std::string body =
        post(segment_, json{{"video_ref", video_ref}, {"objects", objects}}.dump(), "application/json", opts_);
    return decode_mask_response(body, segment_.url());
  }

 private:
  Endpoint caption_;
  Endpoint reason_;
  Endpoint segment_;
  ClientOptions opts_;
};

/// External inpainting over POST /inpaint.
inline InpaintHook http_inpaint_hook(const std::string& url, ClientOptions opts = {}) {
  Endpoint ep = parse_endpoint(url);
  return [ep, opts](const LatentVolume& frames, const EditMask& mask) {
    const json req{{"latent", base64_encode(encode_container(to_container(frames)))},
                   {"mask", base64_encode(encode_container(to_container(mask)))}};
    const std::string body = post(ep, req.dump(), "application/json", opts);
    try {
      return latent_from(decode_container(body));
    } catch (const Error& e) {
      fail(ErrorCode::protocol, "bad inpaint response from " + ep.url() + ": " + e.detail());
    }
  };
}

/// Serves MockBackend (plus harmonic-fill inpainting) over HTTP.
class MockServer {
 public:
  explicit MockServer(std::shared_ptr<const MockBackend> backend) : backend_(std::move(backend)) { install(); }

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  ~MockServer() { stop(); }

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) fail(ErrorCode::transport, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  /// Serves on the calling thread until stop().
  void run(const std::string& host, int port) {
    if (!server_.listen(host, port)) fail(ErrorCode::transport, "cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  static void reply_error(httplib::Response& res, const Error& e) {
    int status = 422;
    std::string kind = std::string(to_string(e.code()));
    if (e.code() == ErrorCode::segmentation || e.code() == ErrorCode::analysis) status = 404;
    res.status = status;
    res.set_content(json{{"error", e.detail()}, {"kind", kind}}.dump(), "application/json");
  }

  template <typename Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      reply_error(res, e);
    } catch (const json::exception& e) {
      reply_error(res, Error(ErrorCode::protocol, e.what()));
    }
  }

  void install() {
    server_.Post("/caption", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        res.set_content(json{{"prompt", backend_->describe_source(body.at("video_ref").get<std::string>())}}.dump(),
                        "application/json");
      });
    });
    server_.Post("/reason", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        const PromptPair p = backend_->derive_target(body.at("source_prompt").get<std::string>(),
                                                     body.at("instruction").get<std::string>());
        res.set_content(json{{"target_prompt", p.target_prompt}, {"objects", p.objects}}.dump(), "application/json");
      });
    });
    server_.Post("/segment", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        const EditMask m = backend_->segment_objects(body.at("video_ref").get<std::string>(),
                                                     body.at("objects").get<std::vector<std::string>>());
        res.set_content(encode_container(to_container(m)), "application/octet-stream");
      });
    });
    server_.Post("/inpaint", [](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        const LatentVolume frames = latent_from(decode_container(base64_decode(body.at("latent").get<std::string>())));
        const EditMask mask = mask_from(decode_container(base64_decode(body.at("mask").get<std::string>())));
        res.set_content(encode_container(to_container(naive_inpaint(frames, mask).frames)), "application/octet-stream");
      });
    });
  }

  std::shared_ptr<const MockBackend> backend_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace noisedit::eiam
