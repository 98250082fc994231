#pragma once

namespace opinionpool {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace opinionpool
