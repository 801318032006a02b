#pragma once

namespace bullbear {

inline constexpr const char* kVersion = "0.1.0";

}
