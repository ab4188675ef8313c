#pragma once

namespace medkit {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace medkit
