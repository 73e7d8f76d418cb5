#pragma once

namespace skipopt {

inline constexpr const char* kVersion = "0.1.0";

} // namespace skipopt
