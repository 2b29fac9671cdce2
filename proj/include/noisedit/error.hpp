#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace noisedit {

enum class ErrorCode {
  dimension,
  domain,
  format,
  length,
  io,
  config,
  condition,
  trajectory,
  transport,
  protocol,
  analysis,
  segmentation,
  numerical,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::domain: return "domain";
    case ErrorCode::format: return "format";
    case ErrorCode::length: return "length";
    case ErrorCode::io: return "io";
    case ErrorCode::config: return "config";
    case ErrorCode::condition: return "condition";
    case ErrorCode::trajectory: return "trajectory";
    case ErrorCode::transport: return "transport";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::analysis: return "analysis";
    case ErrorCode::segmentation: return "segmentation";
    case ErrorCode::numerical: return "numerical";
  }
  return "unknown";
}

// Process exit status for the command-line tool.
//   2 config, 3 I/O or format, 4 service, 5 numerical
inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::domain:
    case ErrorCode::condition:
      return 2;
    case ErrorCode::format:
    case ErrorCode::length:
    case ErrorCode::io:
    case ErrorCode::dimension:
      return 3;
    case ErrorCode::transport:
    case ErrorCode::protocol:
    case ErrorCode::analysis:
    case ErrorCode::segmentation:
      return 4;
    case ErrorCode::trajectory:
    case ErrorCode::numerical:
      return 5;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the leading error-kind label.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace noisedit
