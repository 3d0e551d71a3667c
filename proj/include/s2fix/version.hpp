#pragma once

#include <string_view>

namespace s2fix {

inline constexpr std::string_view kLibraryVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

}  // namespace s2fix
