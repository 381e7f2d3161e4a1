#pragma once

namespace simgcl {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace simgcl
