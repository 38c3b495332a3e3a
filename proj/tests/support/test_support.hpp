#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sheetagent/codec.hpp"
#include "sheetagent/formula.hpp"
#include "sheetagent/tools.hpp"
#include "sheetagent/workbook.hpp"

namespace testsupport {

/// Seeded generator helpers. Every property test fixes its seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(eng_) < p; }
    template <class T>
    const T& pick(const std::vector<T>& xs) {
        return xs[static_cast<std::size_t>(range(0, static_cast<int>(xs.size()) - 1))];
    }
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::filesystem::path fixtures_dir() { return SHEETAGENT_FIXTURES_DIR; }

struct CliResult {
    int exit_code = -1;
    std::string out;
};

/// Runs the sheetagent binary through the shell, capturing stdout and stderr together.
inline CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + SHEETAGENT_CLI_PATH + "\" " + args + " 2>&1";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

inline std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "sheetagent_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

inline sheetagent::Row number_row(const std::vector<double>& xs) {
    sheetagent::Row r;
    for (double x : xs) r.cells.push_back(sheetagent::Cell::literal(sheetagent::Value::number(x)));
    return r;
}

// ---------------------------------------------------------------------------
// Independent formula interpreter.
//
// The generated grammar covers literals, references, unary minus, the four
// arithmetic operators, IF over comparisons, SUM/AVERAGE/COUNT/MIN/MAX and the
// conditional aggregates. Each node carries its own text and a direct evaluator
// over a plain grid, so nothing here goes through the engine's parser, criteria
// or comparison code.

/// Grid cell: blank, number or text.
struct OCell {
    enum Kind { Blank, Num, Txt } kind = Blank;
    double n = 0;
    std::string t;
};

/// One table anchored at A1: header row 1, data rows from row 2.
/// Column A is text, B integer (never blank), C and D numbers that may be blank.
struct OGrid {
    std::vector<std::array<OCell, 4>> rows;
    bool integral = true;

    int last_row() const { return static_cast<int>(rows.size()) + 1; }
    const OCell& at(int col, int row) const { return rows[static_cast<std::size_t>(row - 2)][static_cast<std::size_t>(col - 1)]; }
};

/// Oracle result: blank, number, boolean or #DIV/0!.
struct OVal {
    enum Kind { Blank, Num, Bool, Err } kind = Blank;
    double n = 0;
    bool b = false;
    static OVal num(double x) { return {Num, x, false}; }
    static OVal err() { return {Err, 0, false}; }
};

inline const std::vector<std::string>& oracle_categories() {
    static const std::vector<std::string> cats{"Rent", "Food", "Travel", "Gear", "Misc"};
    return cats;
}

inline OGrid random_grid(Rng& rng) {
    OGrid g;
    g.integral = rng.chance(0.5);
    const int n = rng.range(1, 12);
    for (int i = 0; i < n; ++i) {
        std::array<OCell, 4> row;
        row[0] = {OCell::Txt, 0, rng.pick(oracle_categories())};
        row[1] = {OCell::Num, static_cast<double>(rng.range(-5, 20)), ""};
        for (int c = 2; c < 4; ++c) {
            if (rng.chance(0.2)) continue;
            const double x = g.integral ? rng.range(-50, 200) : rng.range(-5000, 20000) / 100.0 + rng.range(0, 9) / 7.0;
            row[static_cast<std::size_t>(c)] = {OCell::Num, x, ""};
        }
        g.rows.push_back(row);
    }
    return g;
}

/// Engine workbook holding the same data as `g`.
inline sheetagent::Workbook grid_workbook(const OGrid& g) {
    using namespace sheetagent;
    Workbook wb;
    TableSpec spec;
    spec.name = "Data";
    spec.columns = {{"Cat", ValueType::Text}, {"Qty", ValueType::Number}, {"Price", ValueType::Number}, {"Extra", ValueType::Number}};
    for (const auto& orow : g.rows) {
        Row r;
        for (const auto& c : orow) {
            if (c.kind == OCell::Txt) r.cells.push_back(Cell::literal(Value::text(c.t)));
            else if (c.kind == OCell::Num) r.cells.push_back(Cell::literal(Value::number(c.n)));
            else r.cells.push_back(Cell::literal(Value::empty()));
        }
        spec.rows.push_back(std::move(r));
    }
    place_table(wb, "Sheet1", std::move(spec), CellAddress{1, 1, std::nullopt});
    recalculate(wb);
    return wb;
}

struct GenExpr;
using GenPtr = std::shared_ptr<const GenExpr>;

/// Generated node: formula text plus direct evaluation.
struct GenExpr {
    enum Kind { Lit, Ref, Neg, Bin, If, Agg, Cond } kind = Lit;
    double lit = 0;
    int col = 2, row = 2;
    char op = '+';
    std::string cmp;               // If: "=", "<>", "<", "<=", ">", ">="
    std::string fn;                // Agg / Cond
    std::vector<GenPtr> kids;      // Neg: 1, Bin: 2, If: 4 (a, b, then, else), Agg scalars
    // Agg reference arguments, interleaved with scalars by `agg_order`: true = reference.
    struct RangeArg {
        int col = 2;
        int r1 = 0, r2 = 0;  // 0 = whole column
    };
    std::vector<RangeArg> ranges;
    std::vector<bool> agg_order;
    // Cond: sum column (0 = none), then (column, criteria text) tests.
    int sum_col = 0;
    std::vector<std::pair<int, std::string>> tests;

    bool uses_division = false;
};

inline std::string col_letter(int c) { return std::string(1, static_cast<char>('A' + c - 1)); }

inline std::string fmt_literal(double x) {
    std::ostringstream ss;
    ss.precision(17);
    ss << x;
    return ss.str();
}

inline std::string range_text(const GenExpr::RangeArg& r) {
    if (r.r1 == 0) return col_letter(r.col) + ":" + col_letter(r.col);
    return col_letter(r.col) + std::to_string(r.r1) + ":" + col_letter(r.col) + std::to_string(r.r2);
}

inline std::string text_of(const GenExpr& e) {
    switch (e.kind) {
        case GenExpr::Lit: return fmt_literal(e.lit);
        case GenExpr::Ref: return col_letter(e.col) + std::to_string(e.row);
        case GenExpr::Neg: return "-(" + text_of(*e.kids[0]) + ")";
        case GenExpr::Bin: return "(" + text_of(*e.kids[0]) + " " + e.op + " " + text_of(*e.kids[1]) + ")";
        case GenExpr::If:
            return "IF(" + text_of(*e.kids[0]) + e.cmp + text_of(*e.kids[1]) + ", " + text_of(*e.kids[2]) + ", " +
                   text_of(*e.kids[3]) + ")";
        case GenExpr::Agg: {
            std::string s = e.fn + "(";
            std::size_t ri = 0, si = 0;
            for (std::size_t i = 0; i < e.agg_order.size(); ++i) {
                if (i) s += ", ";
                s += e.agg_order[i] ? range_text(e.ranges[ri++]) : text_of(*e.kids[si++]);
            }
            return s + ")";
        }
        case GenExpr::Cond: {
            std::vector<std::string> parts;
            auto whole = [](int c) { return col_letter(c) + ":" + col_letter(c); };
            if (e.fn == "SUMIF") {
                parts = {whole(e.tests[0].first), "\"" + e.tests[0].second + "\""};
                if (e.sum_col) parts.push_back(whole(e.sum_col));
            } else if (e.fn == "COUNTIF") {
                parts = {whole(e.tests[0].first), "\"" + e.tests[0].second + "\""};
            } else {
                if (e.fn == "SUMIFS") parts.push_back(whole(e.sum_col));
                for (const auto& [c, t] : e.tests) {
                    parts.push_back(whole(c));
                    parts.push_back("\"" + t + "\"");
                }
            }
            std::string s = e.fn + "(";
            for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? ", " : "") + parts[i];
            return s + ")";
        }
    }
    return "";
}

inline bool oracle_criteria(const std::string& crit, const OCell& cell) {
    std::string op, body = crit;
    for (const char* o : {"<>", "<=", ">=", "<", ">", "="}) {
        if (crit.rfind(o, 0) == 0) {
            op = o;
            body = crit.substr(op.size());
            break;
        }
    }
    auto lower = [](std::string s) {
        for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        return s;
    };
    char* end = nullptr;
    const double x = std::strtod(body.c_str(), &end);
    const bool numeric = !body.empty() && end && *end == '\0';
    if (!numeric) {
        if (op.empty() || op == "=" || op == "<>") {
            const bool eq = cell.kind == OCell::Txt && lower(cell.t) == lower(body);
            return op == "<>" ? !eq : eq;
        }
        // Ordering against text only applies to text cells, case-insensitively.
        if (cell.kind != OCell::Txt) return false;
        const int c = lower(cell.t).compare(lower(body));
        if (op == "<") return c < 0;
        if (op == "<=") return c <= 0;
        if (op == ">") return c > 0;
        return c >= 0;
    }
    if (cell.kind != OCell::Num) return op == "<>";
    if (op.empty() || op == "=") return cell.n == x;
    if (op == "<>") return cell.n != x;
    if (op == "<") return cell.n < x;
    if (op == "<=") return cell.n <= x;
    if (op == ">") return cell.n > x;
    return cell.n >= x;
}

inline OVal oracle_eval(const GenExpr& e, const OGrid& g) {
    auto as_num = [](const OVal& v) { return v.kind == OVal::Num ? v.n : v.kind == OVal::Bool ? (v.b ? 1.0 : 0.0) : 0.0; };
    switch (e.kind) {
        case GenExpr::Lit: return OVal::num(e.lit);
        case GenExpr::Ref: {
            const OCell& c = g.at(e.col, e.row);
            return c.kind == OCell::Num ? OVal::num(c.n) : OVal{};
        }
        case GenExpr::Neg: {
            OVal v = oracle_eval(*e.kids[0], g);
            if (v.kind == OVal::Err) return v;
            return OVal::num(-as_num(v));
        }
        case GenExpr::Bin: {
            OVal l = oracle_eval(*e.kids[0], g), r = oracle_eval(*e.kids[1], g);
            if (l.kind == OVal::Err) return l;
            if (r.kind == OVal::Err) return r;
            const double x = as_num(l), y = as_num(r);
            switch (e.op) {
                case '+': return OVal::num(x + y);
                case '-': return OVal::num(x - y);
                case '*': return OVal::num(x * y);
                default: return y == 0 ? OVal::err() : OVal::num(x / y);
            }
        }
        case GenExpr::If: {
            OVal a = oracle_eval(*e.kids[0], g), b = oracle_eval(*e.kids[1], g);
            if (a.kind == OVal::Err) return a;
            if (b.kind == OVal::Err) return b;
            // Both sides are numeric or blank here; blank reads as zero.
            const double x = as_num(a), y = as_num(b);
            bool t;
            if (e.cmp == "=") t = x == y;
            else if (e.cmp == "<>") t = x != y;
            else if (e.cmp == "<") t = x < y;
            else if (e.cmp == "<=") t = x <= y;
            else if (e.cmp == ">") t = x > y;
            else t = x >= y;
            return oracle_eval(*e.kids[t ? 2 : 3], g);
        }
        case GenExpr::Agg: {
            std::vector<double> nums;
            std::size_t ri = 0, si = 0;
            for (bool is_ref : e.agg_order) {
                if (is_ref) {
                    const auto& r = e.ranges[ri++];
                    const int r1 = r.r1 ? r.r1 : 2, r2 = r.r1 ? r.r2 : g.last_row();
                    for (int row = r1; row <= r2; ++row)
                        if (g.at(r.col, row).kind == OCell::Num) nums.push_back(g.at(r.col, row).n);
                    continue;
                }
                OVal v = oracle_eval(*e.kids[si++], g);
                if (e.fn == "COUNT") {
                    if (v.kind == OVal::Num) nums.push_back(v.n);
                    continue;
                }
                if (v.kind == OVal::Err) return v;
                nums.push_back(as_num(v));
            }
            if (e.fn == "COUNT") return OVal::num(static_cast<double>(nums.size()));
            double total = 0;
            for (double x : nums) total += x;
            if (e.fn == "SUM") return OVal::num(total);
            if (e.fn == "AVERAGE") return nums.empty() ? OVal::err() : OVal::num(total / static_cast<double>(nums.size()));
            if (nums.empty()) return OVal::num(0);
            double best = nums[0];
            for (double x : nums) best = e.fn == "MIN" ? std::min(best, x) : std::max(best, x);
            return OVal::num(best);
        }
        case GenExpr::Cond: {
            double total = 0;
            std::size_t count = 0;
            for (int row = 2; row <= g.last_row(); ++row) {
                bool hit = true;
                for (const auto& [c, t] : e.tests) hit = hit && oracle_criteria(t, g.at(c, row));
                if (!hit) continue;
                ++count;
                int sc = e.sum_col;
                if (e.fn == "SUMIF" && !sc) sc = e.tests[0].first;
                if (sc && g.at(sc, row).kind == OCell::Num) total += g.at(sc, row).n;
            }
            if (e.fn == "COUNTIF" || e.fn == "COUNTIFS") return OVal::num(static_cast<double>(count));
            return OVal::num(total);
        }
    }
    return OVal::err();
}

class ExprGen {
public:
    ExprGen(Rng& rng, const OGrid& grid) : rng_(rng), g_(grid) {}

    GenPtr expr(int depth) {
        if (depth <= 0) return rng_.chance(0.5) ? literal() : ref();
        switch (rng_.range(0, 7)) {
            case 0: return literal();
            case 1: return ref();
            case 2: {
                auto e = std::make_shared<GenExpr>();
                e->kind = GenExpr::Neg;
                e->kids = {expr(depth - 1)};
                return e;
            }
            case 3:
            case 4: {
                auto e = std::make_shared<GenExpr>();
                e->kind = GenExpr::Bin;
                e->op = "+-*/"[rng_.range(0, 3)];
                if (e->op == '/') uses_division = true;
                e->kids = {expr(depth - 1), expr(depth - 1)};
                return e;
            }
            case 5: {
                auto e = std::make_shared<GenExpr>();
                e->kind = GenExpr::If;
                static const std::vector<std::string> cmps{"=", "<>", "<", "<=", ">", ">="};
                e->cmp = rng_.pick(cmps);
                e->kids = {expr(depth - 1), expr(depth - 1), expr(depth - 1), expr(depth - 1)};
                return e;
            }
            case 6: return aggregate(depth);
            default: return conditional();
        }
    }

    bool uses_division = false;
    bool uses_fraction = false;

private:
    GenPtr literal() {
        auto e = std::make_shared<GenExpr>();
        if (g_.integral && rng_.chance(0.8)) {
            e->lit = rng_.range(0, 40);
        } else {
            e->lit = rng_.range(0, 4000) / 100.0;
            uses_fraction = true;
        }
        return e;
    }

    GenPtr ref() {
        auto e = std::make_shared<GenExpr>();
        e->kind = GenExpr::Ref;
        e->col = rng_.range(2, 4);
        e->row = rng_.range(2, g_.last_row());
        return e;
    }

    GenPtr aggregate(int depth) {
        static const std::vector<std::string> fns{"SUM", "AVERAGE", "COUNT", "MIN", "MAX"};
        auto e = std::make_shared<GenExpr>();
        e->kind = GenExpr::Agg;
        e->fn = rng_.pick(fns);
        if (e->fn == "AVERAGE") uses_division = true;
        const int n = rng_.range(1, 3);
        for (int i = 0; i < n; ++i) {
            if (rng_.chance(0.65)) {
                GenExpr::RangeArg r;
                r.col = rng_.range(2, 4);
                if (rng_.chance(0.5)) {
                    r.r1 = rng_.range(2, g_.last_row());
                    r.r2 = rng_.range(r.r1, g_.last_row());
                }
                e->ranges.push_back(r);
                e->agg_order.push_back(true);
            } else {
                auto k = expr(depth - 1);
                // A bare cell reference is a reference argument, not a scalar.
                if (k->kind == GenExpr::Ref) {
                    auto wrapped = std::make_shared<GenExpr>();
                    wrapped->kind = GenExpr::Bin;
                    wrapped->op = '+';
                    auto zero = std::make_shared<GenExpr>();
                    wrapped->kids = {k, zero};
                    k = wrapped;
                }
                e->kids.push_back(k);
                e->agg_order.push_back(false);
            }
        }
        return e;
    }

    std::pair<int, std::string> test() {
        if (rng_.chance(0.5)) {
            std::string cat = rng_.pick(oracle_categories());
            if (rng_.chance(0.3)) {
                for (auto& ch : cat) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            }
            return {1, (rng_.chance(0.2) ? "<>" : "") + cat};
        }
        static const std::vector<std::string> ops{"", "=", "<>", "<", "<=", ">", ">="};
        return {2, rng_.pick(ops) + std::to_string(rng_.range(-3, 18))};
    }

    GenPtr conditional() {
        static const std::vector<std::string> fns{"SUMIF", "SUMIFS", "COUNTIF", "COUNTIFS"};
        auto e = std::make_shared<GenExpr>();
        e->kind = GenExpr::Cond;
        e->fn = rng_.pick(fns);
        if (e->fn == "SUMIF") {
            e->tests = {test()};
            // Two-argument SUMIF sums its own range; only numeric tests make sense there.
            if (e->tests[0].first == 2 && rng_.chance(0.3)) e->sum_col = 0;
            else e->sum_col = rng_.range(3, 4);
        } else if (e->fn == "COUNTIF") {
            e->tests = {test()};
        } else {
            const int n = rng_.range(1, 3);
            for (int i = 0; i < n; ++i) e->tests.push_back(test());
            if (e->fn == "SUMIFS") e->sum_col = rng_.range(2, 4);
        }
        return e;
    }

    Rng& rng_;
    const OGrid& g_;
};

/// Engine value versus oracle value. Exact unless `tolerance` is set (relative).
inline bool same_value(const sheetagent::Value& v, const OVal& o, double tolerance) {
    using sheetagent::Value;
    switch (o.kind) {
        case OVal::Blank: return v.is_empty();
        case OVal::Bool: return v.is_boolean() && v.as_boolean() == o.b;
        case OVal::Err: return v.is_error() && v.as_error() == sheetagent::ErrorKind::Div0;
        case OVal::Num: {
            if (!v.is_number()) return false;
            const double a = v.as_number(), b = o.n;
            if (tolerance == 0) return a == b;
            return std::fabs(a - b) <= tolerance * std::max({1.0, std::fabs(a), std::fabs(b)});
        }
    }
    return false;
}

inline std::string describe(const OVal& o) {
    switch (o.kind) {
        case OVal::Blank: return "<blank>";
        case OVal::Bool: return o.b ? "TRUE" : "FALSE";
        case OVal::Err: return "#DIV/0!";
        case OVal::Num: return fmt_literal(o.n);
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Random tool sequences. Calls are mostly well-formed with a share of bad ones,
// so reachable states include rejected calls, sorts, filters and totals.

inline sheetagent::ToolCall random_tool_call(Rng& rng, const sheetagent::Workbook& wb, int serial) {
    using sheetagent::Json;
    std::vector<std::string> tables;
    std::vector<std::vector<std::string>> columns;
    for (const auto& sh : wb.sheets())
        for (const auto& t : sh.tables) {
            tables.push_back(t.name);
            std::vector<std::string> cs;
            for (const auto& c : t.columns) cs.push_back(c.header);
            columns.push_back(cs);
        }
    auto id = "c" + std::to_string(serial);
    const int kind = tables.empty() ? 1 : rng.range(0, 8);
    if (kind <= 1) {
        const int n = rng.range(0, 6);
        Json rows = Json::array();
        for (int i = 0; i < n; ++i)
            rows.push_back(Json::array({rng.pick(oracle_categories()), std::to_string(rng.range(0, 50)),
                                        rng.chance(0.2) ? "" : std::to_string(rng.range(100, 999)) + ".25",
                                        rng.chance(0.3) ? "2023-04-" + std::to_string(rng.range(10, 28)) : "",
                                        "=B" + std::to_string(i + 2) + "*C" + std::to_string(i + 2)}));
        Json args{{"name", "T" + std::to_string(serial)},
                  {"kind", rng.chance(0.3) ? "insight" : "data"},
                  {"columns", Json::array({Json{{"header", "Cat"}, {"type", "text"}}, Json{{"header", "Qty"}, {"type", "number"}},
                                           Json{{"header", "Cost"}, {"type", "currency"}}, Json{{"header", "When"}, {"type", "date"}},
                                           Json{{"header", "Line"}, {"type", "currency"}}})},
                  {"rows", rows}};
        if (rng.chance(0.3)) args["totals"] = Json::array({"Total", "=SUM(B:B)", "=SUM(C:C)", "", "=SUM(E:E)"});
        if (rng.chance(0.1)) args["anchor"] = "A1";
        if (rng.chance(0.1)) args["rows"] = Json::array({Json::array({"x", "not a number", "", "", ""})});
        return {id, "create_table", args};
    }
    const std::size_t ti = static_cast<std::size_t>(rng.range(0, static_cast<int>(tables.size()) - 1));
    const std::string table = rng.chance(0.9) ? tables[ti] : "Missing";
    const std::string column = rng.chance(0.9) ? rng.pick(columns[ti]) : "Nope";
    static const std::vector<std::string> crits{">10", "<=300", "Rent", "<>Food", ">=2023-04-15", "0"};
    switch (kind) {
        case 2: return {id, "sort_rows", Json{{"table", table}, {"column", column}, {"ascending", rng.chance(0.5)}}};
        case 3: return {id, "filter_rows", Json{{"table", table}, {"column", column}, {"criteria", rng.pick(crits)}}};
        case 4: return {id, "add_chart", Json{{"table", table}, {"column", column},
                                                 {"chartType", rng.pick(std::vector<std::string>{"pie", "line", "histogram", "bar"})}}};
        case 5: {
            Json a{{"table", table}, {"color", rng.pick(std::vector<std::string>{"red", "green", "yellow", "blue"})}};
            if (rng.chance(0.5)) a["cell"] = "B" + std::to_string(rng.range(1, 8));
            else {
                a["criteria"] = rng.pick(crits);
                if (rng.chance(0.5)) a["column"] = column;
            }
            return {id, "highlight_cell", a};
        }
        case 6: return {id, "highlight_row", Json{{"table", table}, {"color", rng.pick(std::vector<std::string>{"red", "green", "yellow"})},
                                                     {"criteria", rng.pick(crits)}}};
        case 7: return {id, "change_table_color",
                        Json{{"table", table}, {"color", rng.pick(std::vector<std::string>{"teal", "#A1B2C3", "purple", "mauve"})}}};
        default: return {id, "change_sheet_name", Json{{"to", rng.pick(std::vector<std::string>{"Budget", "Q2 Data", "Sheet1", "Bad/Name"})}}};
    }
}

// ---------------------------------------------------------------------------
// Markdown protos

inline std::string random_cell_text(Rng& rng, bool allow_empty) {
    static const std::vector<std::string> words{"alpha", "Beta", "12", "3.5", "$4.20", "2023-04-01", "a|b", "x \\ y",
                                                "pipe|", "|lead", "back\\", "=SUM(A:A)", "=B2*C2", "=IF(A2>1, \"y|n\", \"n\")",
                                                "50%", "TRUE", "r&d", "*bold*", "`code`", "#", "-", ":--", "tab\tin"};
    if (allow_empty && rng.chance(0.1)) return "";
    std::string s = rng.pick(words);
    const int extra = rng.range(0, 2);
    for (int i = 0; i < extra; ++i) s += " " + rng.pick(words);
    return s;
}

inline sheetagent::TableProto random_proto(Rng& rng) {
    sheetagent::TableProto p;
    static const std::vector<std::string> names{"", "Expenses", "Totals", "Grades 2023", "Q2 Sales", "My_Table"};
    p.name = rng.pick(names);
    const int cols = rng.range(1, 6);
    for (int c = 0; c < cols; ++c) p.columns.push_back(random_cell_text(rng, false));
    const int rows = rng.range(0, 7);
    for (int r = 0; r < rows; ++r) {
        std::vector<std::string> row;
        for (int c = 0; c < cols; ++c) row.push_back(random_cell_text(rng, true));
        p.rows.push_back(std::move(row));
    }
    return p;
}

}  // namespace testsupport
