#pragma once

#include <stdexcept>
#include <string>

namespace smx {

enum class ErrorCode {
  invalid_shape = 10,
  invalid_config = 11,
  insufficient_samples = 12,
  not_psd = 13,
  format_error = 14,
  data_error = 15,
  io_error = 16,
  invalid_distribution = 17,
  budget_exceeded = 18,
  divergence = 19,
  length_mismatch = 20,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}

  ErrorCode code() const { return code_; }
  int exit_code() const { return static_cast<int>(code_); }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_shape: return "invalid-shape";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::insufficient_samples: return "insufficient-samples";
    case ErrorCode::not_psd: return "not-psd";
    case ErrorCode::format_error: return "format-error";
    case ErrorCode::data_error: return "data-error";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::invalid_distribution: return "invalid-distribution";
    case ErrorCode::budget_exceeded: return "budget-exceeded";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::length_mismatch: return "length-mismatch";
  }
  return "unknown";
}

}  // namespace smx
