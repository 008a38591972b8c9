#pragma once

namespace hopfsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hopfsim
