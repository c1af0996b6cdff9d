#pragma once

namespace occdet {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace occdet
