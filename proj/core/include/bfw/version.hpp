#pragma once

namespace bfw {

inline constexpr const char* engine_version = "0.1.0";
inline constexpr int run_record_schema_version = 1;

}  // namespace bfw
