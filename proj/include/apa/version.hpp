#pragma once

namespace apa {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace apa
