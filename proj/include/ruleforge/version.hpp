#pragma once

#include <string_view>

namespace ruleforge {

inline constexpr std::string_view kVersion = "ruleforge-0.1.0";

}  // namespace ruleforge
