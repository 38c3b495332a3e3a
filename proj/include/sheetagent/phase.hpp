#pragma once

#include <optional>
#include <string_view>

namespace sheetagent {

/// Scaffold stage of a session. Ordered; sessions only move forward.
enum class Phase { GatherRequirements, DefineDataTables, ExtractInsights };

std::string_view to_string(Phase p);
std::optional<Phase> parse_phase(std::string_view s);

}  // namespace sheetagent
