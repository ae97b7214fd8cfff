#pragma once

namespace trapsim {

inline constexpr const char* kVersion = "trapsim 0.3.0";

}  // namespace trapsim
