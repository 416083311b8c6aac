#pragma once

namespace radrep {
inline constexpr const char* kVersion = "0.1.0";
}
