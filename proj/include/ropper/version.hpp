#pragma once

namespace ropper {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ropper
