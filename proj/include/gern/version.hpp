#pragma once

namespace gern {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gern
