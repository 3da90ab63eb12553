#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace heatflow {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  io,
  parse,
  format,
  no_convergence,
  nan_detected,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::format: return "format";
    case ErrorCode::no_convergence: return "no_convergence";
    case ErrorCode::nan_detected: return "nan_detected";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

}  // namespace heatflow
