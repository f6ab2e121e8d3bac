#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "json.hpp"

namespace guardian {

enum class ErrorCode {
  InvalidArgument,
  InvalidRiskId,
  UnknownRisk,
  InvalidMode,
  InvalidRoles,
  EmptyDefinition,
  DuplicateId,
  MissingContent,
  EmptyContent,
  InvalidDistribution,
  BothScoresZero,
  UnparseableVerdict,
  Timeout,
  UpstreamError,
  MalformedLogprobs,
  ParseError,
  MissingField,
  DegenerateClasses,
  AbortThreshold,
  IoError,
  ParseMiss,
  QuotaUnmet,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidRiskId: return "InvalidRiskId";
    case ErrorCode::UnknownRisk: return "UnknownRisk";
    case ErrorCode::InvalidMode: return "InvalidMode";
    case ErrorCode::InvalidRoles: return "InvalidRoles";
    case ErrorCode::EmptyDefinition: return "EmptyDefinition";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MissingContent: return "MissingContent";
    case ErrorCode::EmptyContent: return "EmptyContent";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::BothScoresZero: return "BothScoresZero";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::UpstreamError: return "UpstreamError";
    case ErrorCode::MalformedLogprobs: return "MalformedLogprobs";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::DegenerateClasses: return "DegenerateClasses";
    case ErrorCode::AbortThreshold: return "AbortThreshold";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseMiss: return "ParseMiss";
    case ErrorCode::QuotaUnmet: return "QuotaUnmet";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code plus optional structured
/// diagnostics (raw tokens, line numbers, upstream status, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json details = nullptr)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message),
        details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const nlohmann::json& details() const noexcept { return details_; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"error", std::string(to_string(code_))}, {"message", message_}};
    if (!details_.is_null()) j["details"] = details_;
    return j;
  }

 private:
  ErrorCode code_;
  std::string message_;
  nlohmann::json details_;
};

}  // namespace guardian
