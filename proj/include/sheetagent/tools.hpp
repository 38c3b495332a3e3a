#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "sheetagent/json.hpp"
#include "sheetagent/workbook.hpp"

namespace sheetagent {

/// Names of the eight workbook tools, in descriptor order.
std::span<const std::string_view> tool_names();

bool is_tool_name(std::string_view name);

struct ToolCall {
    std::string id;
    std::string name;
    Json args = Json::object();
};

/// A rejected argument. `field` is a path such as `color` or `rows[2][1]`; `message`
/// names the field and, for enumerations, the legal values. It is shown to the agent.
struct ValidationIssue {
    std::string field;
    std::string message;
};

enum class ToolStatus { Ok, ValidationError, ExecutionError };

std::string_view to_string(ToolStatus s);

struct ToolResult {
    ToolStatus status = ToolStatus::Ok;
    std::string message;
    std::uint64_t revision = 0;
    std::optional<std::string> field;  // set for ValidationError
};

/// Checks `call` against its schema and the workbook (referenced sheets, tables and
/// columns must exist; enum values must be legal). Never throws.
std::optional<ValidationIssue> validate_tool_call(const ToolCall& call, const Workbook& wb);

/// Validates, then executes. A ValidationError leaves the workbook untouched; an
/// ExecutionError rolls it back to its state before the call.
ToolResult execute_tool(const ToolCall& call, Workbook& wb);

/// Executes a call that already passed validation (entities may have changed since).
ToolResult execute_validated(const ToolCall& call, Workbook& wb);

/// Machine-readable descriptors for all tools ("tools/v1").
const Json& tool_schemas();

/// Theme colors accepted by change_table_color, besides `#RRGGBB`.
std::span<const std::string_view> table_theme_colors();

}  // namespace sheetagent
