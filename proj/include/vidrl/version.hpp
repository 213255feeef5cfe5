#pragma once

namespace vidrl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vidrl
