#pragma once

namespace boslink {

inline constexpr const char* kVersion = "0.1.0";

} // namespace boslink
