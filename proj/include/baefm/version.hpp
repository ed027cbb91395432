#pragma once

namespace baefm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace baefm
