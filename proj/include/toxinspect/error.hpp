#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace toxinspect {

// Every engine failure carries one of these codes; the HTTP layer maps them
// onto status codes one-to-one.
enum class ErrorCode {
  kBadRequest,
  kNotFound,
  kConflict,
  kSessionComplete,
  kUpstreamFailure,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadRequest: return "bad_request";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kSessionComplete: return "session_complete";
    case ErrorCode::kUpstreamFailure: return "upstream_failure";
  }
  return "bad_request";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json detail = nullptr)
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              nlohmann::json detail = nullptr) {
  throw Error(code, message, std::move(detail));
}

}  // namespace toxinspect
