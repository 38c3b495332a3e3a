// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number of failures.
#include <chrono>
#include <deque>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include "properties.hpp"
#include "sheetagent/codec.hpp"
#include "sheetagent/gateway.hpp"
#include "sheetagent/orchestrator.hpp"
#include "sheetagent/suggestions.hpp"
#include "sheetagent/tools.hpp"

using namespace sheetagent;
using namespace testsupport;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

std::string quoted(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }
std::string fixture(const std::string& name) { return quoted(fixtures_dir() / name); }

std::vector<Json> read_transcript(const std::filesystem::path& p) {
    std::vector<Json> out;
    std::istringstream lines(read_file(p));
    for (std::string line; std::getline(lines, line);)
        if (!line.empty()) out.push_back(Json::parse(line));
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y)); });
}

// ---------------------------------------------------------------------------

Outcome scenario_replay() {
    const auto transcript = temp_path("acc_scenario.jsonl"), state = temp_path("acc_scenario.json");
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_cli("replay --quiet --fixture " + fixture("expenses_scenario.script.json") + " --transcript " + quoted(transcript) +
                           " --state " + quoted(state));
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    if (r.exit_code != 0) return fail("replay exited " + std::to_string(r.exit_code) + ": " + r.out);
    if (ms >= 5000) return fail("replay took " + std::to_string(ms) + " ms");

    const Workbook wb = parse_state(read_file(state));
    const Table* data = nullptr;
    const Table* insight = nullptr;
    for (const auto& s : wb.sheets())
        for (const auto& t : s.tables) {
            std::vector<std::string> headers;
            for (const auto& c : t.columns) headers.push_back(c.header);
            if (t.kind == TableKind::Data && headers == std::vector<std::string>{"Date", "Category", "Amount", "Notes"}) data = &t;
            if (t.kind == TableKind::Insight) insight = &t;
        }
    if (!data) return fail("(a) no Data table with Date/Category/Amount/Notes");
    if (!insight) return fail("(b) no Insight table");

    // (b) SUMIFS column against a row scan of the data table.
    std::optional<std::size_t> total_col;
    for (std::size_t c = 0; c < insight->columns.size(); ++c) {
        bool all = !insight->rows.empty();
        for (const auto& row : insight->rows)
            all = all && row.cells[c].is_formula() && row.cells[c].formula().source.find("SUMIFS") != std::string::npos;
        if (all) total_col = c;
    }
    if (!total_col) return fail("(b) no column of SUMIFS formulas in " + insight->name);
    const Date from = *Date::parse_iso("2023-04-01"), to = *Date::parse_iso("2023-04-30");
    std::vector<double> totals;
    for (const auto& row : insight->rows) {
        const std::string category = row.cells[0].cached.as_text();
        double expected = 0;
        for (const auto& d : data->rows) {
            const Value& date = d.cells[0].cached;
            if (!date.is_date() || date.as_date() < from || date.as_date() > to) continue;
            if (!d.cells[1].cached.is_text() || !iequals(d.cells[1].cached.as_text(), category)) continue;
            if (d.cells[2].cached.is_number()) expected += d.cells[2].cached.as_number();
        }
        const Value& got = row.cells[*total_col].cached;
        if (!got.is_number() || got.as_number() != expected)
            return fail("(b) " + category + ": engine " + got.display() + ", row scan " + Value::number(expected).display());
        totals.push_back(expected);
    }
    // (c)
    if (!insight->sort || insight->sort->ascending || insight->sort->column != *total_col)
        return fail("(c) insight table is not sorted descending by " + insight->columns[*total_col].header);
    if (!std::is_sorted(totals.rbegin(), totals.rend())) return fail("(c) totals are not in descending order");
    // (d)
    bool pie = false;
    for (const auto& s : wb.sheets())
        for (const auto& t : s.tables)
            for (const auto& c : t.charts) pie = pie || c.type == ChartType::Pie;
    if (!pie) return fail("(d) no pie chart");
    // (e)
    const std::set<std::string> wanted{"Summarize the total amount spent in April.",
                                       "Create a pie chart showing expenses by category for April.",
                                       "Add more example data for April expenses."};
    bool found = false;
    for (const auto& e : read_transcript(transcript)) {
        if (e["type"] != "suggestions") continue;
        std::set<std::string> texts;
        for (const auto& i : e["payload"]["items"]) texts.insert(i["suggestion"].get<std::string>());
        found = found || texts == wanted;
    }
    if (!found) return fail("(e) no suggestions event with the three expected pills");
    return {true, std::to_string(totals.size()) + " SUMIFS totals match the row scan; replay " + std::to_string(ms) + " ms"};
}

Outcome formula_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = formula_oracle_property(777, 1000);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    if (!rep.ok()) return fail(*rep.failure);
    if (ms >= 30000) return fail("took " + std::to_string(ms) + " ms");
    return {rep.checked >= 200, std::to_string(rep.checked) + " pairs agree (" + std::to_string(ms) + " ms)"};
}

Outcome task_formulas() {
    const auto overtime =
        run_cli("eval --workbook " + fixture("overtime.md") + " --formula \"=IF(B2>10, 10*C2 + (B2-10)*C2*1.1, B2*C2)\"");
    if (overtime.exit_code != 0 || overtime.out != "1110\n") return fail("overtime gave '" + overtime.out + "'");
    const std::vector<std::pair<std::string, std::string>> bands{
        {"C2", "Excellent"}, {"C3", "Very good"}, {"C4", "Satisfactory"}, {"C5", "Needs improvement"}};
    for (const auto& [cell, band] : bands) {
        const auto r = run_cli("eval --workbook " + fixture("grades.md") + " --formula =" + cell);
        if (r.exit_code != 0 || r.out != band + "\n") return fail(cell + " gave '" + r.out + "', expected " + band);
    }
    return {true, "overtime 1110; bands for 95/85/75/74.9 exact"};
}

Outcome tool_suite() {
    // Every call of the tour, applied directly: failures must name their field and leave the bytes alone.
    const Script tour = Script::load(fixtures_dir() / "tool_tour.script.json");
    std::map<std::string, int> ok, failed;
    Workbook wb;
    for (const auto& turn : tour.turns)
        for (const auto& step : turn.steps)
            for (const auto& call : step.tool_calls) {
                const std::string before = serialize_state(wb);
                const auto rev = wb.revision();
                const ToolResult r = execute_tool(call, wb);
                if (r.status == ToolStatus::Ok) {
                    ++ok[call.name];
                    continue;
                }
                ++failed[call.name];
                if (!r.field || r.message.find(*r.field) == std::string::npos)
                    return fail(call.name + " failure does not name its field: " + r.message);
                if (serialize_state(wb) != before || wb.revision() != rev) return fail(call.name + " failure changed the workbook");
            }
    for (const std::string_view n : tool_names()) {
        const std::string name(n);
        if (!ok.count(name)) return fail(name + " never succeeded");
        if (!failed.count(name)) return fail(name + " has no validation-failure case");
    }
    if (run_cli("replay --quiet --fixture " + fixture("tool_tour.script.json")).exit_code != 0) return fail("tool tour replay failed");

    // Scripted correction: rejected highlight, corrected within three attempts.
    const auto transcript = temp_path("acc_retry.jsonl");
    if (run_cli("replay --quiet --fixture " + fixture("retry_highlight.script.json") + " --transcript " + quoted(transcript)).exit_code != 0)
        return fail("retry fixture replay failed");
    int rejected = 0, corrected_at = 0;
    for (const auto& e : read_transcript(transcript)) {
        if (e["type"] != "tool_result" || e["payload"]["name"] != "highlight_cell") continue;
        if (e["payload"]["status"] == "validation_error") ++rejected;
        if (e["payload"]["status"] == "ok") corrected_at = e["payload"]["attempt"];
    }
    if (rejected == 0 || corrected_at == 0 || corrected_at > kMaxToolAttempts)
        return fail("retry loop did not correct the highlight within " + std::to_string(kMaxToolAttempts) + " attempts");
    return {true, "8/8 tools succeed and fail with named fields; retry corrected at attempt " + std::to_string(corrected_at)};
}

Outcome filter_sort() {
    const auto sort = sort_property(31337, 150);
    if (!sort.ok()) return fail("sort: " + *sort.failure);
    const auto filter = filter_property(4242, 150);
    if (!filter.ok()) return fail("filter: " + *filter.failure);
    return {sort.checked >= 100 && filter.checked >= 100,
            std::to_string(sort.checked) + " sorted and " + std::to_string(filter.checked) + " filtered tables"};
}

Outcome non_overlap() {
    const auto rep = placement_property(2024, 1000);
    if (!rep.ok()) return fail(*rep.failure);
    return {rep.checked == 1000, std::to_string(rep.accepted) + " placed, " + std::to_string(rep.rejected) + " OverlapError"};
}

Outcome markdown_round_trip() {
    Rng rng(515);
    int pipes = 0, formulas = 0;
    for (int i = 0; i < 600; ++i) {
        const TableProto p = random_proto(rng);
        for (const auto& row : p.rows)
            for (const auto& cell : row) {
                pipes += cell.find('|') != std::string::npos;
                formulas += !cell.empty() && cell.front() == '=';
            }
    }
    if (pipes == 0 || formulas == 0) return fail("generator produced no pipe or formula cells");
    const auto rep = markdown_property(515, 600);
    if (!rep.ok()) return fail(*rep.failure);
    return {true, std::to_string(rep.checked) + " protos (" + std::to_string(pipes) + " pipe cells, " + std::to_string(formulas) +
                      " formula cells)"};
}

Outcome determinism() {
    const auto t1 = temp_path("acc_det_1.jsonl"), s1 = temp_path("acc_det_1.json");
    const auto t2 = temp_path("acc_det_2.jsonl"), s2 = temp_path("acc_det_2.json");
    const std::string fx = fixture("expenses.fixture.json");
    for (const auto& [t, s] : {std::pair{t1, s1}, std::pair{t2, s2}}) {
        const auto r = run_cli("replay --quiet --fixture " + fx + " --transcript " + quoted(t) + " --state " + quoted(s));
        if (r.exit_code != 0) return fail("replay exited " + std::to_string(r.exit_code) + ": " + r.out);
    }
    const std::string a = read_file(t1), b = read_file(t2);
    if (a.empty() || a != b) return fail("event logs differ");
    if (read_file(s1) != read_file(s2)) return fail("final states differ");
    // A fresh recording replays to the same bytes too.
    const auto rec = temp_path("acc_det.fixture.json"), t3 = temp_path("acc_det_3.jsonl"), t4 = temp_path("acc_det_4.jsonl");
    if (run_cli("record --quiet --script " + fixture("expenses_scenario.script.json") + " --out " + quoted(rec) + " --transcript " +
                quoted(t3))
            .exit_code != 0)
        return fail("record failed");
    if (run_cli("replay --quiet --fixture " + quoted(rec) + " --transcript " + quoted(t4)).exit_code != 0) return fail("replay of new recording failed");
    if (read_file(t3) != read_file(t4)) return fail("recording and its replay differ");
    return {true, std::to_string(read_transcript(t1).size()) + " events byte-identical across replays"};
}

/// Plan replies come from a list; suggestion requests get a fixed grounded reply.
class ListBackend : public Backend {
public:
    std::deque<LlmResponse> plan;
    LlmResponse send(const LlmRequest& request) override {
        if (request.kind == RequestKind::Suggest)
            return LlmResponse{R"([{"thought":"t","suggestion":"Add a chart."},{"thought":"t","suggestion":"Add rows."},)"
                               R"({"thought":"t","suggestion":"Sort it."}])",
                               {}};
        if (plan.empty()) return LlmResponse{"Done.", {}};
        auto r = plan.front();
        plan.pop_front();
        return r;
    }
};

ToolCall base_table() {
    return ToolCall{"b", "create_table",
                    Json{{"name", "Stock"},
                         {"columns", Json::array({Json{{"header", "Item"}, {"type", "text"}}, Json{{"header", "Qty"}, {"type", "number"}}})},
                         {"rows", Json::array({Json::array({"a", "4"}), Json::array({"b", "12"}), Json::array({"c", "7"})})}}};
}

Outcome stop_undo() {
    const std::vector<ToolCall> batch{
        ToolCall{"1", "change_table_color", Json{{"table", "Stock"}, {"color", "green"}}},
        ToolCall{"2", "sort_rows", Json{{"table", "Stock"}, {"column", "Qty"}, {"ascending", false}}},
        ToolCall{"3", "add_chart", Json{{"table", "Stock"}, {"column", "Qty"}, {"chartType", "pie"}}},
        ToolCall{"4", "filter_rows", Json{{"table", "Stock"}, {"column", "Qty"}, {"criteria", ">5"}}},
        ToolCall{"5", "highlight_row", Json{{"table", "Stock"}, {"color", "red"}, {"column", "Qty"}, {"criteria", ">10"}}},
    };
    for (std::size_t k = 1; k <= batch.size(); ++k) {
        auto backend = std::make_shared<ListBackend>();
        backend->plan.push_back(LlmResponse{std::nullopt, {base_table()}});
        backend->plan.push_back(LlmResponse{"ok", {}});
        backend->plan.push_back(LlmResponse{std::nullopt, batch});
        Session s(backend);
        s.run_turn("make the table");
        const std::string pre_batch = s.state_document();
        std::size_t applied = 0;
        s.set_after_tool_hook([&](const ToolCall&) {
            if (++applied == k && k < batch.size()) s.stop();
        });
        const TurnOutcome out = s.run_turn("style it");
        Workbook expect;
        execute_tool(base_table(), expect);
        for (std::size_t i = 0; i < k; ++i) execute_tool(batch[i], expect);
        if (s.state_document() != serialize_state(expect)) return fail("stop after " + std::to_string(k) + " tools: state is not the prefix");
        if (k < batch.size() && out.status != TurnStatus::Cancelled) return fail("turn was not cancelled");
        s.undo();
        if (s.state_document() != pre_batch) return fail("undo after " + std::to_string(k) + " tools is not byte-identical");
    }
    return {true, "stops after 1.." + std::to_string(batch.size() - 1) + " of " + std::to_string(batch.size()) +
                      " tools keep the prefix; undo restores pre-batch bytes"};
}

Outcome suggestion_contract() {
    int turns = 0;
    for (const std::string name : {"expenses_scenario.script.json", "retry_highlight.script.json", "tool_tour.script.json"}) {
        const Script script = Script::load(fixtures_dir() / name);
        Session s(std::make_shared<ScriptedBackend>(script));
        for (const auto& turn : script.turns) {
            const TurnOutcome out = turn.accept ? s.accept_suggestion(*turn.accept) : s.run_turn(turn.user);
            if (out.status != TurnStatus::Completed) return fail(name + ": turn did not complete");
            const auto& ev = out.events;
            if (ev.size() < 2 || ev[ev.size() - 2].type != "suggestions" || ev.back().type != "done")
                return fail(name + ": turn does not end with suggestions then done");
            if (out.suggestions.size() != kSuggestionCount) return fail(name + ": " + std::to_string(out.suggestions.size()) + " pills");
            const Workbook wb = s.workbook();
            for (const auto& p : out.suggestions) {
                if (p.text.empty() || p.text.size() > kMaxSuggestionLength) return fail(name + ": bad pill length: " + p.text);
                if (!ungrounded_names(p.text, wb).empty()) return fail(name + ": ungrounded pill: " + p.text);
            }
            ++turns;
        }
    }
    // Fallback templates: every phase, empty and populated workbooks.
    std::vector<Workbook> workbooks(1);
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
        Workbook wb;
        const int steps = rng.range(1, 15);
        for (int k = 0; k < steps; ++k) execute_tool(random_tool_call(rng, wb, k), wb);
        workbooks.push_back(wb);
    }
    int pills = 0;
    for (const auto& wb : workbooks)
        for (Phase p : {Phase::GatherRequirements, Phase::DefineDataTables, Phase::ExtractInsights}) {
            const auto items = fallback_suggestions(p, wb);
            if (items.size() != kSuggestionCount) return fail("fallback gave " + std::to_string(items.size()) + " pills");
            for (const auto& s : items)
                if (s.text.empty() || s.text.size() > kMaxSuggestionLength || !ungrounded_names(s.text, wb).empty())
                    return fail("bad fallback pill: " + s.text);
            pills += static_cast<int>(items.size());
        }
    return {true, std::to_string(turns) + " scripted turns end with 3 grounded pills; " + std::to_string(pills) + " fallback pills valid"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"scenario_replay", scenario_replay},
        {"formula_oracle", formula_oracle},
        {"task_formulas", task_formulas},
        {"tool_suite", tool_suite},
        {"filter_sort_properties", filter_sort},
        {"non_overlap", non_overlap},
        {"markdown_round_trip", markdown_round_trip},
        {"determinism", determinism},
        {"stop_undo", stop_undo},
        {"suggestion_contract", suggestion_contract},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failures;
}
