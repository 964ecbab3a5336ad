#pragma once

namespace geodesign {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace geodesign
