#pragma once

namespace cammorph {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cammorph
