#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace riskint {

// Coarse grouping used by the CLI to pick an exit code.
enum class ErrorCategory { Data, Fit, Inference, Usage };

// Every failure raised by the library carries a stable kind name
// ("NonBinaryValue", "SeparationDetected", ...) and optional structured
// details so the CLI can emit a machine-readable error object.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string kind, const std::string& message,
        nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message),
        category_(category),
        kind_(std::move(kind)),
        details_(std::move(details)) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& kind() const noexcept { return kind_; }
  const nlohmann::json& details() const noexcept { return details_; }

  nlohmann::json to_json() const {
    return {{"error", kind_}, {"message", what()}, {"details", details_}};
  }

 private:
  ErrorCategory category_;
  std::string kind_;
  nlohmann::json details_;
};

inline Error data_error(std::string kind, const std::string& msg,
                        nlohmann::json details = nlohmann::json::object()) {
  return Error(ErrorCategory::Data, std::move(kind), msg, std::move(details));
}

inline Error fit_error(std::string kind, const std::string& msg,
                       nlohmann::json details = nlohmann::json::object()) {
  return Error(ErrorCategory::Fit, std::move(kind), msg, std::move(details));
}

inline Error inference_error(std::string kind, const std::string& msg,
                             nlohmann::json details = nlohmann::json::object()) {
  return Error(ErrorCategory::Inference, std::move(kind), msg,
               std::move(details));
}

inline Error usage_error(const std::string& msg) {
  return Error(ErrorCategory::Usage, "UsageError", msg);
}

}  // namespace riskint
