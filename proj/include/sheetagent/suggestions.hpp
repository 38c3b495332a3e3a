#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sheetagent/gateway.hpp"
#include "sheetagent/json.hpp"
#include "sheetagent/phase.hpp"
#include "sheetagent/workbook.hpp"

namespace sheetagent {

inline constexpr std::size_t kSuggestionCount = 3;
inline constexpr std::size_t kMaxSuggestionLength = 120;

struct Suggestion {
    std::string thought;
    std::string text;
    bool operator==(const Suggestion&) const = default;
};

struct SuggestionContext {
    std::string state_doc;
    /// Recent conversation as (role, text) pairs, oldest first.
    std::vector<std::pair<std::string, std::string>> history;
    std::string last_message;
    std::string goal_summary;
    Phase phase = Phase::GatherRequirements;
};

struct SuggestionBatch {
    std::vector<Suggestion> items;
    bool fallback = false;
    /// Why backend replies were rejected, in order.
    std::vector<std::string> rejections;
};

/// Parses a suggestions/v1 reply (JSON array of {thought, suggestion}, optionally fenced).
/// Returns the reason when it is unusable.
std::optional<std::string> parse_suggestion_reply(std::string_view reply, const Workbook& wb,
                                                  std::vector<Suggestion>& out);

/// Table or column names the text refers to that do not exist in `wb`.
std::vector<std::string> ungrounded_names(std::string_view text, const Workbook& wb);

/// Asks the backend, reprompts once on a bad reply, then falls back. Never throws.
SuggestionBatch generate_suggestions(Backend& backend, const SuggestionContext& ctx, const Workbook& wb);

/// Deterministic phase templates.
std::vector<Suggestion> fallback_suggestions(Phase phase, const Workbook& wb);

/// Request sent for suggestions; exposed for fixtures and tests.
LlmRequest suggestion_request(const SuggestionContext& ctx);

}  // namespace sheetagent
