#pragma once

namespace kgmix {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace kgmix
