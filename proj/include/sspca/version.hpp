#pragma once

namespace sspca {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sspca
