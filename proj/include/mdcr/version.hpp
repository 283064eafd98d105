#pragma once

namespace mdcr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mdcr
