#pragma once

namespace cgedge {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cgedge
