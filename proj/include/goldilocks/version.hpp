#pragma once

namespace goldilocks {

inline constexpr const char* kVersion = "goldilocks 0.1.0";

} // namespace goldilocks
