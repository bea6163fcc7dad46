#pragma once

namespace levy_passage {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace levy_passage
