#pragma once

namespace riskint {
inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSoftware = "riskint 0.1.0";
}  // namespace riskint
