#pragma once

namespace tnet {

inline constexpr const char* kVersion = "templatenet 0.1.0";

}  // namespace tnet
