#pragma once

#include <nlohmann/json.hpp>

namespace hypergen {

inline constexpr const char* kVersion = "0.1.0";

/// Library, compiler and dependency versions for run metadata.
nlohmann::json version_info();

}  // namespace hypergen
