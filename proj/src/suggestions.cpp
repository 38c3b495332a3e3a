#include "sheetagent/suggestions.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace sheetagent {

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::GatherRequirements: return "gather_requirements";
        case Phase::DefineDataTables: return "define_data_tables";
        case Phase::ExtractInsights: return "extract_insights";
    }
    return "gather_requirements";
}

std::optional<Phase> parse_phase(std::string_view s) {
    for (Phase p : {Phase::GatherRequirements, Phase::DefineDataTables, Phase::ExtractInsights}) {
        if (s == to_string(p)) return p;
    }
    return std::nullopt;
}

namespace {

constexpr std::array<std::string_view, 11> kGenericTableWords{"Data", "Insight", "Summary", "New", "Pivot", "Totals",
                                                              "The",  "A",       "An",      "Markdown", "CSV"};

bool names_table(const Workbook& wb, std::string_view name) { return wb.find_table(name) != nullptr; }

bool names_anything(const Workbook& wb, std::string_view name) {
    if (names_table(wb, name) || wb.find_sheet(name)) return true;
    for (const auto& s : wb.sheets())
        for (const auto& t : s.tables)
            if (t.find_column(name)) return true;
    return false;
}

std::string strip_punct(std::string_view w) {
    while (!w.empty() && !std::isalnum(static_cast<unsigned char>(w.front()))) w.remove_prefix(1);
    while (!w.empty() && !std::isalnum(static_cast<unsigned char>(w.back()))) w.remove_suffix(1);
    return std::string(w);
}

std::vector<std::string> words_of(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.emplace_back(text.substr(start, i - start));
    }
    return out;
}

std::string without_fence(std::string_view s) {
    s = trim(s);
    if (s.substr(0, 3) == "```") {
        const auto nl = s.find('\n');
        s = nl == std::string_view::npos ? std::string_view{} : s.substr(nl + 1);
        const auto close = s.rfind("```");
        if (close != std::string_view::npos) s = s.substr(0, close);
    }
    return std::string(trim(s));
}

std::string clip(std::string s) {
    if (s.size() <= kMaxSuggestionLength) return s;
    return s.substr(0, kMaxSuggestionLength);
}

const char* kSuggestInstructions =
    "You suggest next steps for a person building a spreadsheet with an assistant. First simulate the person's "
    "thought process about what they would want next, then write the suggestion they would click. Reply with a "
    "JSON array of exactly three objects {\"thought\": string, \"suggestion\": string}. Each suggestion is one "
    "short imperative sentence written as the person's request, at most 120 characters. Only mention tables and "
    "columns that exist in the workbook state. Be concise.";

}  // namespace

std::vector<std::string> ungrounded_names(std::string_view text, const Workbook& wb) {
    std::vector<std::string> missing;
    auto report = [&](std::string name) {
        if (std::find(missing.begin(), missing.end(), name) == missing.end()) missing.push_back(std::move(name));
    };

    // Quoted spans: "x" anywhere; 'x' only when the quotes are not apostrophes.
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char q = text[i];
        if (q != '"' && q != '\'') continue;
        if (q == '\'' && i > 0 && std::isalnum(static_cast<unsigned char>(text[i - 1]))) continue;
        std::size_t j = i + 1;
        while (j < text.size()) {
            if (text[j] == q && (q == '"' || j + 1 >= text.size() || !std::isalnum(static_cast<unsigned char>(text[j + 1]))))
                break;
            ++j;
        }
        if (j >= text.size()) break;
        const std::string name(trim(text.substr(i + 1, j - i - 1)));
        if (!name.empty() && !names_anything(wb, name)) report(name);
        i = j;
    }

    // Capitalized words in front of "table": "the Expenses table".
    const auto words = words_of(text);
    for (std::size_t i = 1; i < words.size(); ++i) {
        const std::string w = to_lower(strip_punct(words[i]));
        if (w != "table" && w != "tables") continue;
        const std::string& prev_raw = words[i - 1];
        if (prev_raw.back() == '"' || prev_raw.back() == '\'') continue;
        std::vector<std::string> run;
        for (std::size_t k = i; k-- > 0;) {
            const std::string bare = strip_punct(words[k]);
            if (bare.empty() || !std::isupper(static_cast<unsigned char>(bare.front()))) break;
            if (k != i - 1 && std::string_view(".!?:,;").find(words[k].back()) != std::string_view::npos) break;
            const bool sentence_start = k == 0 || std::string_view(".!?:").find(words[k - 1].back()) != std::string_view::npos;
            if (sentence_start) break;
            run.insert(run.begin(), bare);
        }
        if (run.empty()) continue;
        bool grounded = false;
        std::string joined;
        for (std::size_t k = run.size(); k-- > 0;) {
            joined = run[k] + (joined.empty() ? "" : " " + joined);
            if (names_table(wb, joined)) grounded = true;
        }
        if (grounded) continue;
        if (run.size() == 1 && std::find(kGenericTableWords.begin(), kGenericTableWords.end(), run[0]) !=
                                   kGenericTableWords.end())
            continue;
        report(joined);
    }
    return missing;
}

std::optional<std::string> parse_suggestion_reply(std::string_view reply, const Workbook& wb,
                                                  std::vector<Suggestion>& out) {
    out.clear();
    Json j = Json::parse(without_fence(reply), nullptr, false);
    if (j.is_discarded()) return "reply is not valid JSON";
    if (j.is_object() && j.contains("suggestions")) j = j["suggestions"];
    if (!j.is_array()) return "reply must be a JSON array";
    if (j.size() != kSuggestionCount)
        return "expected exactly 3 suggestions, got " + std::to_string(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& item = j[i];
        const std::string at = "suggestion " + std::to_string(i + 1);
        if (!item.is_object() || !item.contains("suggestion") || !item["suggestion"].is_string())
            return at + " needs a \"suggestion\" string";
        Suggestion s;
        s.text = std::string(trim(item["suggestion"].get<std::string>()));
        if (item.contains("thought") && item["thought"].is_string()) s.thought = item["thought"].get<std::string>();
        if (s.text.empty()) return at + " is empty";
        if (s.text.size() > kMaxSuggestionLength)
            return at + " is longer than " + std::to_string(kMaxSuggestionLength) + " characters";
        if (auto missing = ungrounded_names(s.text, wb); !missing.empty())
            return at + " mentions \"" + missing.front() + "\", which is not a table or column in the workbook";
        out.push_back(std::move(s));
    }
    return std::nullopt;
}

LlmRequest suggestion_request(const SuggestionContext& ctx) {
    std::string system = kSuggestInstructions;
    system += "\n\nCurrent plan phase: ";
    system += to_string(ctx.phase);
    system += "\nGoal: " + (ctx.goal_summary.empty() ? std::string("(not yet known)") : ctx.goal_summary);
    system += "\n\nWorkbook state:\n" + ctx.state_doc;
    std::string user = "Conversation so far:\n";
    for (const auto& [role, text] : ctx.history) user += role + ": " + text + "\n";
    user += "\nLast message: " + ctx.last_message + "\n\nSuggest three next steps.";
    LlmRequest r;
    r.kind = RequestKind::Suggest;
    r.messages = Json::array({Json{{"role", "system"}, {"content", system}}, Json{{"role", "user"}, {"content", user}}});
    return r;
}

SuggestionBatch generate_suggestions(Backend& backend, const SuggestionContext& ctx, const Workbook& wb) {
    SuggestionBatch batch;
    LlmRequest request = suggestion_request(ctx);
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string reply;
        try {
            reply = backend.send(request).content.value_or("");
        } catch (const BackendError& e) {
            batch.rejections.push_back(std::string("backend unavailable: ") + e.what());
            break;
        }
        std::vector<Suggestion> items;
        auto problem = parse_suggestion_reply(reply, wb, items);
        if (!problem) {
            batch.items = std::move(items);
            return batch;
        }
        batch.rejections.push_back(*problem);
        request.messages.push_back(Json{{"role", "assistant"}, {"content", reply}});
        request.messages.push_back(Json{
            {"role", "user"},
            {"content", "That reply was rejected: " + *problem +
                            ". Reply again with only a JSON array of exactly three {\"thought\", \"suggestion\"} objects."}});
    }
    batch.items = fallback_suggestions(ctx.phase, wb);
    batch.fallback = true;
    return batch;
}

std::vector<Suggestion> fallback_suggestions(Phase phase, const Workbook& wb) {
    const Table* data = nullptr;
    const Table* any = nullptr;
    for (const auto& s : wb.sheets()) {
        for (const auto& t : s.tables) {
            if (!any) any = &t;
            if (!data && t.kind == TableKind::Data) data = &t;
        }
    }
    if (phase == Phase::ExtractInsights && (data || any)) {
        const Table& t = data ? *data : *any;
        std::optional<std::size_t> numeric, label;
        for (std::size_t j = 0; j < t.columns.size(); ++j) {
            if (!numeric && is_numeric(t.columns[j].type)) numeric = j;
            if (!label && t.columns[j].type == ValueType::Text) label = j;
        }
        const std::string table = "\"" + t.name + "\"";
        std::vector<Suggestion> out;
        if (numeric) {
            const std::string col = "\"" + t.columns[*numeric].header + "\"";
            const std::string by = label ? " by \"" + t.columns[*label].header + "\"" : "";
            out.push_back({"I want the big picture before the details.",
                           clip("Summarize the total of " + col + by + " in a new insight table.")});
            out.push_back({"Seeing the largest entries first would help.",
                           clip("Sort the " + table + " table by " + col + " from largest to smallest.")});
            out.push_back({"A chart would make the numbers easier to compare.",
                           clip("Create a pie chart of " + col + " from the " + table + " table.")});
        } else {
            out.push_back({"There is nothing to add up yet.", clip("Add a numeric column to the " + table + " table.")});
            out.push_back({"I want to see how often each entry appears.",
                           clip("Count the rows of the " + table + " table in a new insight table.")});
            out.push_back({"More rows would make patterns visible.", clip("Add more example rows to the " + table + " table.")});
        }
        // Long names can break the length cap; fall back to name-free wording.
        const bool fits = std::all_of(out.begin(), out.end(), [](const Suggestion& s) {
            return s.text.size() < kMaxSuggestionLength && s.text.back() == '.';
        });
        if (fits) return out;
        return {{"I want the big picture before the details.", "Summarize the main numbers in a new insight table."},
                {"Seeing the largest entries first would help.", "Sort the data from largest to smallest."},
                {"A chart would make the numbers easier to compare.", "Create a pie chart of the main numeric column."}};
    }
    if (phase == Phase::GatherRequirements) {
        return {{"The assistant should know who will read this.", "Ask me who the audience for this spreadsheet is."},
                {"The time range decides how much data to track.", "Ask me what timescale the spreadsheet should cover."},
                {"Some background would make the plan fit my situation.",
                 "Ask me for more context about what I want to track."}};
    }
    return {{"I would like to see the columns before anything is built.", "Propose the data table as a Markdown table."},
            {"Realistic rows make it easier to judge the layout.", "Add a few example rows to the proposed table."},
            {"The draft looks right, so it can go into the workbook.", "Transfer the proposed table to the spreadsheet."}};
}

}  // namespace sheetagent
