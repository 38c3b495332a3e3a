#include "sheetagent/tools.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>
#include <set>

#include "sheetagent/formula.hpp"

namespace sheetagent {

namespace {

constexpr std::array<std::string_view, 8> kToolNames{
    "change_sheet_name", "create_table", "add_chart",     "sort_rows",
    "filter_rows",       "highlight_cell", "highlight_row", "change_table_color",
};

constexpr std::array<std::string_view, 8> kThemeColors{
    "blue", "green", "orange", "gray", "purple", "red", "yellow", "teal",
};

struct Invalid {
    ValidationIssue issue;
};

[[noreturn]] void reject(std::string field, std::string message) {
    throw Invalid{{field, field + ": " + message}};
}

std::string join(std::span<const std::string_view> items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    return out;
}

std::string describe(const Json& v) {
    if (v.is_string()) return "'" + v.get<std::string>() + "'";
    return v.dump();
}

/// Reads and checks tool arguments, throwing Invalid on the first problem.
class Args {
public:
    Args(const Json& args, std::initializer_list<std::string_view> allowed) : args_(args) {
        if (!args_.is_object()) reject("args", "arguments must be a JSON object");
        for (const auto& [key, value] : args_.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                std::vector<std::string_view> names(allowed);
                reject(key, "unknown argument; expected one of: " + join(names));
            }
        }
    }

    bool has(std::string_view key) const { return args_.contains(key) && !args_.at(std::string(key)).is_null(); }

    const Json& raw(std::string_view key) const { return args_.at(std::string(key)); }

    std::string string(std::string_view key) const {
        if (!has(key)) reject(std::string(key), "required string argument is missing");
        const Json& v = raw(key);
        if (!v.is_string()) reject(std::string(key), "must be a string, got " + describe(v));
        std::string s = v.get<std::string>();
        if (trim(s).empty()) reject(std::string(key), "must not be empty");
        return s;
    }

    std::optional<std::string> optional_string(std::string_view key) const {
        if (!has(key)) return std::nullopt;
        return string(key);
    }

    bool boolean(std::string_view key, bool fallback) const {
        if (!has(key)) return fallback;
        const Json& v = raw(key);
        if (v.is_boolean()) return v.get<bool>();
        if (v.is_string() && (iequals(v.get<std::string>(), "true") || iequals(v.get<std::string>(), "false")))
            return iequals(v.get<std::string>(), "true");
        reject(std::string(key), "must be true or false, got " + describe(v));
    }

    template <class T>
    T choice(std::string_view key, std::optional<T> (*parse)(std::string_view),
             std::span<const std::string_view> legal) const {
        const std::string s = string(key);
        if (auto v = parse(s)) return *v;
        reject(std::string(key), "'" + s + "' is not allowed; expected one of: " + join(legal));
    }

private:
    const Json& args_;
};

constexpr std::array<std::string_view, 3> kHighlightColors{"red", "green", "yellow"};
constexpr std::array<std::string_view, 3> kChartTypes{"line", "pie", "histogram"};
constexpr std::array<std::string_view, 2> kKinds{"data", "insight"};
constexpr std::array<std::string_view, 6> kValueTypes{"text", "number", "currency", "percent", "date", "boolean"};

std::string list_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += "'" + names[i] + "'";
    }
    return out.empty() ? "(none)" : out;
}

const Table& require_table(const Args& a, const Workbook& wb) {
    const std::string name = a.string("table");
    if (const Table* t = wb.find_table(name)) return *t;
    std::vector<std::string> names;
    for (const auto& s : wb.sheets())
        for (const auto& t : s.tables) names.push_back(t.name);
    reject("table", "no table named '" + name + "'; existing tables: " + list_names(names));
}

std::size_t require_column(const Args& a, const Table& t, std::string_view key = "column") {
    const std::string header = a.string(key);
    if (auto idx = t.find_column(header)) return *idx;
    std::vector<std::string> names;
    for (const auto& c : t.columns) names.push_back(c.header);
    reject(std::string(key), "table '" + t.name + "' has no column '" + header + "'; columns: " + list_names(names));
}

// ---------------------------------------------------------------------------
// create_table

enum class LiteralClass { Number, Currency, Percent, Date, Boolean, Text };

LiteralClass classify_literal(std::string_view s) {
    if (parse_number(s)) return LiteralClass::Number;
    if (parse_literal(s, ValueType::Currency)) return LiteralClass::Currency;
    if (s.size() > 1 && s.back() == '%' && parse_literal(s, ValueType::Percent)) return LiteralClass::Percent;
    if (Date::parse_iso(s)) return LiteralClass::Date;
    if (iequals(s, "true") || iequals(s, "false")) return LiteralClass::Boolean;
    return LiteralClass::Text;
}

std::string entry_text(const Json& v, const std::string& field) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "TRUE" : "FALSE";
    if (v.is_number()) return format_number(v.get<double>());
    reject(field, "cell values must be strings, numbers, booleans or null, got " + describe(v));
}

bool is_formula_text(std::string_view s) { return s.size() > 1 && s.front() == '='; }

struct PlannedTable {
    std::string sheet;
    std::optional<CellAddress> anchor;
    TableSpec spec;
    std::vector<bool> inferred_formula_column;
};

PlannedTable plan_create_table(const Json& args, const Workbook& wb) {
    Args a(args, {"name", "kind", "sheet", "anchor", "columns", "rows", "totals"});
    PlannedTable plan;
    plan.spec.name = a.string("name");
    if (wb.find_table(plan.spec.name)) reject("name", "a table named '" + plan.spec.name + "' already exists");
    if (a.has("kind")) plan.spec.kind = a.choice<TableKind>("kind", parse_table_kind, kKinds);

    plan.sheet = wb.sheets().front().name;
    if (auto s = a.optional_string("sheet")) {
        const Sheet* sheet = wb.find_sheet(*s);
        if (!sheet) {
            std::vector<std::string> names;
            for (const auto& sh : wb.sheets()) names.push_back(sh.name);
            reject("sheet", "no sheet named '" + *s + "'; existing sheets: " + list_names(names));
        }
        plan.sheet = sheet->name;
    }

    if (!a.has("columns")) reject("columns", "required array of column headers is missing");
    const Json& cols = a.raw("columns");
    if (!cols.is_array() || cols.empty()) reject("columns", "must be a non-empty array");
    std::vector<std::optional<ValueType>> declared;
    std::set<std::string> seen;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const std::string field = "columns[" + std::to_string(j) + "]";
        ColumnSpec spec;
        std::optional<ValueType> type;
        if (cols[j].is_string()) {
            spec.header = cols[j].get<std::string>();
        } else if (cols[j].is_object()) {
            Args col(cols[j], {"header", "type"});
            try {
                spec.header = col.string("header");
                if (col.has("type")) type = col.choice<ValueType>("type", parse_value_type, kValueTypes);
            } catch (Invalid& inv) {
                inv.issue.field = field + "." + inv.issue.field;
                inv.issue.message = field + "." + inv.issue.message;
                throw;
            }
        } else {
            reject(field, "must be a header string or {header, type}, got " + describe(cols[j]));
        }
        if (trim(spec.header).empty()) reject(field, "column header must not be empty");
        if (!seen.insert(to_lower(spec.header)).second) reject(field, "duplicate column header '" + spec.header + "'");
        plan.spec.columns.push_back(spec);
        declared.push_back(type);
    }
    const std::size_t width = plan.spec.columns.size();

    // Collect raw text per row, remembering which rows are totals.
    std::vector<std::vector<std::string>> texts;
    std::vector<bool> aggregate;
    auto read_rows = [&](const Json& rows, const std::string& base, bool totals) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::string field = base + "[" + std::to_string(i) + "]";
            const Json& row = rows[i];
            if (!row.is_array()) reject(field, "each row must be an array of cell values");
            if (row.size() != width)
                reject(field, "row has " + std::to_string(row.size()) + " cells but the table has " +
                                  std::to_string(width) + " columns");
            std::vector<std::string> cells;
            for (std::size_t j = 0; j < width; ++j) cells.push_back(entry_text(row[j], field + "[" + std::to_string(j) + "]"));
            texts.push_back(std::move(cells));
            aggregate.push_back(totals);
        }
    };
    if (a.has("rows")) {
        if (!a.raw("rows").is_array()) reject("rows", "must be an array of rows");
        read_rows(a.raw("rows"), "rows", false);
    }
    if (a.has("totals")) {
        const Json& t = a.raw("totals");
        if (!t.is_array()) reject("totals", "must be an array of cell values (one totals row) or of rows");
        if (!t.empty() && t.front().is_array()) read_rows(t, "totals", true);
        else read_rows(Json::array({t}), "totals", true);
    }

    // Column types: declared, or inferred from literal entries.
    plan.inferred_formula_column.assign(width, false);
    for (std::size_t j = 0; j < width; ++j) {
        if (declared[j]) {
            plan.spec.columns[j].type = *declared[j];
            continue;
        }
        std::set<LiteralClass> classes;
        for (const auto& row : texts) {
            const std::string& s = row[j];
            if (s.empty() || is_formula_text(s)) continue;
            classes.insert(classify_literal(s));
        }
        ValueType type = ValueType::Text;
        if (classes.empty()) {
            type = ValueType::Number;
            plan.inferred_formula_column[j] = true;
        } else if (classes.size() == 1) {
            switch (*classes.begin()) {
                case LiteralClass::Number: type = ValueType::Number; break;
                case LiteralClass::Currency: type = ValueType::Currency; break;
                case LiteralClass::Percent: type = ValueType::Percent; break;
                case LiteralClass::Date: type = ValueType::Date; break;
                case LiteralClass::Boolean: type = ValueType::Boolean; break;
                case LiteralClass::Text: type = ValueType::Text; break;
            }
        } else if (classes == std::set<LiteralClass>{LiteralClass::Number, LiteralClass::Currency}) {
            type = ValueType::Currency;
        } else if (classes == std::set<LiteralClass>{LiteralClass::Number, LiteralClass::Percent}) {
            type = ValueType::Percent;
        }
        plan.spec.columns[j].type = type;
    }

    for (std::size_t i = 0; i < texts.size(); ++i) {
        Row row;
        row.aggregate = aggregate[i];
        for (std::size_t j = 0; j < width; ++j) {
            const std::string& s = texts[i][j];
            const std::string field =
                (aggregate[i] ? "totals" : "rows[" + std::to_string(i) + "]") + "[" + std::to_string(j) + "]";
            if (is_formula_text(s)) {
                try {
                    row.cells.push_back(Cell::formula(make_formula(s)));
                } catch (const ParseError& e) {
                    reject(field, "invalid formula '" + s + "': " + e.what());
                }
                continue;
            }
            auto v = parse_literal(s, plan.spec.columns[j].type);
            if (!v)
                reject(field, "'" + s + "' is not a valid " + std::string(to_string(plan.spec.columns[j].type)) +
                                  " value for column '" + plan.spec.columns[j].header + "'");
            row.cells.push_back(Cell::literal(*v));
        }
        plan.spec.rows.push_back(std::move(row));
    }

    const Sheet& sheet = *wb.find_sheet(plan.sheet);
    const int w = static_cast<int>(width);
    const int h = 1 + static_cast<int>(plan.spec.rows.size());
    if (a.has("anchor")) {
        const std::string text = a.string("anchor");
        auto addr = CellAddress::parse(text);
        if (!addr || addr->sheet) reject("anchor", "'" + text + "' is not an A1-style cell address such as A1");
        const Rect r{addr->column, addr->row, addr->column + w - 1, addr->row + h - 1};
        if (r.right > kMaxColumn || r.bottom > kMaxRow) reject("anchor", "table would extend past the grid");
        for (const auto& t : sheet.tables) {
            if (t.rect().intersects(r))
                reject("anchor", "table at " + r.to_string() + " would overlap table '" + t.name + "' at " +
                                     t.rect().to_string() + "; tables must not overlap");
        }
        addr->sheet.reset();
        plan.anchor = *addr;
    }
    return plan;
}

void apply_create_table(const Json& args, Workbook& wb, std::string& message) {
    PlannedTable plan = plan_create_table(args, wb);
    Sheet& sheet = *wb.find_sheet(plan.sheet);
    const CellAddress anchor =
        plan.anchor ? *plan.anchor
                    : first_free_anchor(sheet, static_cast<int>(plan.spec.columns.size()),
                                        1 + static_cast<int>(plan.spec.rows.size()));
    const std::string name = plan.spec.name;
    place_table(wb, plan.sheet, std::move(plan.spec), anchor);
    recalculate(wb);

    // Formula-only columns take their type from the computed values.
    Table& table = *wb.find_table(name);
    bool retyped = false;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        if (!plan.inferred_formula_column[j]) continue;
        std::set<Value::Type> types;
        for (const auto& row : table.rows) {
            const Value& v = row.cells[j].cached;
            if (!v.is_empty() && !v.is_error()) types.insert(v.type());
        }
        ValueType t = ValueType::Number;
        if (types == std::set<Value::Type>{Value::Type::Text}) t = ValueType::Text;
        else if (types == std::set<Value::Type>{Value::Type::Date}) t = ValueType::Date;
        else if (types == std::set<Value::Type>{Value::Type::Boolean}) t = ValueType::Boolean;
        else if (!types.empty() && types != std::set<Value::Type>{Value::Type::Number}) t = ValueType::Text;
        if (t != table.columns[j].type) {
            table.columns[j].type = t;
            retyped = true;
        }
    }
    if (retyped) refresh_roles(wb);
    message = "Created " + std::string(to_string(table.kind)) + " table '" + table.name + "' at " +
              table.rect().to_string() + " on sheet '" + plan.sheet + "' with " + std::to_string(table.rows.size()) +
              " rows.";
}

// ---------------------------------------------------------------------------
// other tools

struct SheetRename {
    std::string from;
    std::string to;
};

SheetRename check_change_sheet_name(const Json& args, const Workbook& wb) {
    Args a(args, {"from", "to"});
    SheetRename r;
    r.from = wb.sheets().front().name;
    if (auto from = a.optional_string("from")) {
        const Sheet* s = wb.find_sheet(*from);
        if (!s) {
            std::vector<std::string> names;
            for (const auto& sh : wb.sheets()) names.push_back(sh.name);
            reject("from", "no sheet named '" + *from + "'; existing sheets: " + list_names(names));
        }
        r.from = s->name;
    }
    r.to = a.string("to");
    if (r.to.size() > 31) reject("to", "sheet names are limited to 31 characters");
    for (char c : r.to) {
        if (std::string_view("[]:*?/\\!").find(c) != std::string_view::npos)
            reject("to", "sheet names must not contain any of [ ] : * ? / \\ !");
    }
    if (const Sheet* other = wb.find_sheet(r.to); other && !iequals(other->name, r.from))
        reject("to", "a sheet named '" + other->name + "' already exists");
    return r;
}

void apply_change_sheet_name(const Json& args, Workbook& wb, std::string& message) {
    const SheetRename r = check_change_sheet_name(args, wb);
    Sheet* sheet = wb.find_sheet(r.from);
    if (!sheet) throw NotFound("sheet '" + r.from + "' no longer exists");
    sheet->name = r.to;
    for (auto& s : wb.sheets()) {
        for (auto& t : s.tables) {
            for (auto& row : t.rows) {
                for (auto& cell : row.cells) {
                    if (!cell.is_formula()) continue;
                    const Formula& f = cell.formula();
                    auto renamed = rename_sheet_refs(f.ast, r.from, r.to);
                    if (!equal(*renamed, *f.ast)) cell.content = Formula{print_formula(*renamed), renamed};
                }
            }
        }
    }
    wb.touch();
    recalculate(wb);
    message = "Renamed sheet '" + r.from + "' to '" + r.to + "'.";
}

void check_add_chart(const Json& args, const Workbook& wb) {
    Args a(args, {"table", "column", "chartType", "title"});
    const Table& t = require_table(a, wb);
    a.choice<ChartType>("chartType", parse_chart_type, kChartTypes);
    const std::size_t col = require_column(a, t);
    if (!is_numeric(t.columns[col].type))
        reject("column", "charts need numeric data, but column '" + t.columns[col].header + "' is " +
                             std::string(to_string(t.columns[col].type)) + "; pick a number, currency or percent column");
    a.optional_string("title");
}

Table& table_for_exec(const Json& args, Workbook& wb) {
    Table* t = wb.find_table(args.at("table").get<std::string>());
    if (!t) throw NotFound("table '" + args.at("table").get<std::string>() + "' no longer exists");
    return *t;
}

std::size_t column_for_exec(const Json& args, const Table& t, const char* key = "column") {
    auto idx = t.find_column(args.at(key).get<std::string>());
    if (!idx) throw NotFound("column '" + args.at(key).get<std::string>() + "' no longer exists in '" + t.name + "'");
    return *idx;
}

void apply_add_chart(const Json& args, Workbook& wb, std::string& message) {
    check_add_chart(args, wb);
    Table& t = table_for_exec(args, wb);
    const std::size_t col = column_for_exec(args, t);
    ChartSpec chart;
    chart.type = *parse_chart_type(args.at("chartType").get<std::string>());
    chart.table = t.name;
    chart.column = t.columns[col].header;
    chart.title = args.contains("title") && args.at("title").is_string() ? args.at("title").get<std::string>()
                                                                          : chart.column + " by " + t.columns[0].header;
    t.charts.push_back(chart);
    wb.touch();
    recalculate(wb);
    message = "Added a " + std::string(to_string(chart.type)) + " chart of '" + chart.column + "' from table '" +
              t.name + "'.";
}

void check_sort_rows(const Json& args, const Workbook& wb) {
    Args a(args, {"table", "column", "ascending"});
    const Table& t = require_table(a, wb);
    require_column(a, t);
    a.boolean("ascending", true);
}

void apply_sort_rows(const Json& args, Workbook& wb, std::string& message) {
    check_sort_rows(args, wb);
    Table& t = table_for_exec(args, wb);
    const std::size_t col = column_for_exec(args, t);
    const bool ascending = Args(args, {"table", "column", "ascending"}).boolean("ascending", true);

    std::size_t data_rows = 0;
    while (data_rows < t.rows.size() && !t.rows[data_rows].aggregate) ++data_rows;
    std::vector<std::size_t> perm(data_rows);
    std::iota(perm.begin(), perm.end(), 0);
    auto blank_or_error = [](const Value& v) { return v.is_empty() || v.is_error(); };
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) {
        const Value& a = t.rows[x].cells[col].cached;
        const Value& b = t.rows[y].cells[col].cached;
        // Blanks and errors always sink to the bottom.
        if (blank_or_error(a) || blank_or_error(b)) return !blank_or_error(a) && blank_or_error(b);
        const auto c = compare_values(a, b);
        return ascending ? c < 0 : c > 0;
    });

    std::vector<Row> reordered;
    reordered.reserve(t.rows.size());
    const int left = t.rect().left, right = t.rect().right;
    for (std::size_t i = 0; i < data_rows; ++i) {
        Row row = t.rows[perm[i]];
        const int from = t.grid_row(perm[i]), to = t.grid_row(i);
        if (from != to) {
            for (auto& cell : row.cells) {
                if (!cell.is_formula()) continue;
                auto moved = shift_row_refs(cell.formula().ast, from, to, left, right);
                if (!equal(*moved, *cell.formula().ast)) cell.content = Formula{print_formula(*moved), moved};
            }
        }
        reordered.push_back(std::move(row));
    }
    for (std::size_t i = data_rows; i < t.rows.size(); ++i) reordered.push_back(t.rows[i]);
    t.rows = std::move(reordered);
    t.sort = SortState{col, ascending};
    wb.touch();
    recalculate(wb);
    message = "Sorted table '" + t.name + "' by '" + t.columns[col].header + "' " +
              (ascending ? "ascending." : "descending.");
}

void check_filter_rows(const Json& args, const Workbook& wb) {
    Args a(args, {"table", "column", "criteria"});
    const Table& t = require_table(a, wb);
    require_column(a, t);
    if (!a.has("criteria")) reject("criteria", "required condition such as \">=5\" or \"Operational\" is missing");
    if (!a.raw("criteria").is_string() && !a.raw("criteria").is_number())
        reject("criteria", "must be a condition string such as \">=5\", got " + describe(a.raw("criteria")));
}

std::string criteria_text(const Json& v) {
    return v.is_string() ? v.get<std::string>() : format_number(v.get<double>());
}

void apply_filter_rows(const Json& args, Workbook& wb, std::string& message) {
    check_filter_rows(args, wb);
    Table& t = table_for_exec(args, wb);
    const std::size_t col = column_for_exec(args, t);
    FilterState f;
    f.column = col;
    f.source = criteria_text(args.at("criteria"));
    f.criteria = Criteria::parse(f.source);
    std::size_t hidden = 0;
    for (auto& row : t.rows) {
        row.hidden = !row.aggregate && !f.criteria.matches(row.cells[col].cached);
        hidden += row.hidden ? 1 : 0;
    }
    t.filter = f;
    wb.touch();
    recalculate(wb);
    message = "Filtered table '" + t.name + "' to rows where '" + t.columns[col].header + "' matches \"" + f.source +
              "\"; " + std::to_string(hidden) + " rows hidden.";
}

void check_highlight(const Json& args, const Workbook& wb, bool row_scope) {
    Args a = row_scope ? Args(args, {"table", "color", "criteria", "column"})
                       : Args(args, {"table", "color", "cell", "criteria", "column"});
    const Table& t = require_table(a, wb);
    a.choice<HighlightColor>("color", parse_highlight_color, kHighlightColors);
    if (a.has("column")) require_column(a, t);
    if (!row_scope && a.has("cell")) {
        if (a.has("criteria")) reject("cell", "give either a cell address or a criteria condition, not both");
        const std::string text = a.string("cell");
        auto addr = CellAddress::parse(text);
        if (!addr) reject("cell", "'" + text + "' is not an A1-style cell address");
        const Rect r = t.rect();
        if (!r.contains(addr->column, addr->row) || addr->row == r.top)
            reject("cell", text + " is not a data cell of table '" + t.name + "' (data cells span " +
                               column_letters(r.left) + std::to_string(r.top + 1) + ":" + column_letters(r.right) +
                               std::to_string(r.bottom) + ")");
        return;
    }
    if (!a.has("criteria"))
        reject("criteria", row_scope ? "required condition such as \">100\" is missing"
                                     : "required: a condition such as \">100\", or a 'cell' address");
    if (!a.raw("criteria").is_string() && !a.raw("criteria").is_number())
        reject("criteria", "must be a condition string such as \">100\", got " + describe(a.raw("criteria")));
}

void apply_highlight(const Json& args, Workbook& wb, bool row_scope, std::string& message) {
    check_highlight(args, wb, row_scope);
    Table& t = table_for_exec(args, wb);
    HighlightRule rule;
    rule.color = *parse_highlight_color(args.at("color").get<std::string>());
    if (args.contains("column") && !args.at("column").is_null()) rule.column = t.columns[column_for_exec(args, t)].header;
    std::string target;
    if (!row_scope && args.contains("cell") && !args.at("cell").is_null()) {
        rule.scope = HighlightRule::Scope::SingleCell;
        rule.cell = *CellAddress::parse(args.at("cell").get<std::string>());
        rule.cell.sheet.reset();
        target = "cell " + rule.cell.to_string();
    } else {
        rule.scope = row_scope ? HighlightRule::Scope::RowsMatching : HighlightRule::Scope::CellsMatching;
        rule.source = criteria_text(args.at("criteria"));
        rule.criteria = Criteria::parse(rule.source);
        target = std::string(row_scope ? "rows" : "cells") + " matching \"" + rule.source + "\"" +
                 (rule.column.empty() ? "" : " in '" + rule.column + "'");
    }
    t.highlights.push_back(rule);
    wb.touch();
    recalculate(wb);
    message = "Highlighted " + target + " of table '" + t.name + "' in " + std::string(to_string(rule.color)) + ".";
}

bool is_hex_color(std::string_view s) {
    return s.size() == 7 && s[0] == '#' &&
           std::all_of(s.begin() + 1, s.end(), [](unsigned char c) { return std::isxdigit(c); });
}

void check_table_color(const Json& args, const Workbook& wb) {
    Args a(args, {"table", "color"});
    require_table(a, wb);
    const std::string c = a.string("color");
    const bool named = std::any_of(kThemeColors.begin(), kThemeColors.end(),
                                   [&](std::string_view n) { return iequals(n, c); });
    if (!named && !is_hex_color(c))
        reject("color", "'" + c + "' is not a table color; expected one of: " + join(kThemeColors) +
                            ", or a hex color like #4472C4");
}

void apply_table_color(const Json& args, Workbook& wb, std::string& message) {
    check_table_color(args, wb);
    Table& t = table_for_exec(args, wb);
    const std::string c = args.at("color").get<std::string>();
    t.color = is_hex_color(c) ? to_upper(c) : to_lower(c);
    wb.touch();
    recalculate(wb);
    message = "Changed the color of table '" + t.name + "' to " + t.color + ".";
}

void check(const ToolCall& call, const Workbook& wb) {
    const std::string& n = call.name;
    if (n == "change_sheet_name") check_change_sheet_name(call.args, wb);
    else if (n == "create_table") plan_create_table(call.args, wb);
    else if (n == "add_chart") check_add_chart(call.args, wb);
    else if (n == "sort_rows") check_sort_rows(call.args, wb);
    else if (n == "filter_rows") check_filter_rows(call.args, wb);
    else if (n == "highlight_cell") check_highlight(call.args, wb, false);
    else if (n == "highlight_row") check_highlight(call.args, wb, true);
    else if (n == "change_table_color") check_table_color(call.args, wb);
    else reject("name", "unknown tool '" + n + "'; expected one of: " + join(kToolNames));
}

void apply(const ToolCall& call, Workbook& wb, std::string& message) {
    const std::string& n = call.name;
    if (n == "change_sheet_name") apply_change_sheet_name(call.args, wb, message);
    else if (n == "create_table") apply_create_table(call.args, wb, message);
    else if (n == "add_chart") apply_add_chart(call.args, wb, message);
    else if (n == "sort_rows") apply_sort_rows(call.args, wb, message);
    else if (n == "filter_rows") apply_filter_rows(call.args, wb, message);
    else if (n == "highlight_cell") apply_highlight(call.args, wb, false, message);
    else if (n == "highlight_row") apply_highlight(call.args, wb, true, message);
    else if (n == "change_table_color") apply_table_color(call.args, wb, message);
    else throw NotFound("unknown tool '" + n + "'");
}

// ---------------------------------------------------------------------------
// descriptors

Json string_param(std::string description) {
    return Json{{"type", "string"}, {"description", std::move(description)}};
}

Json enum_param(std::span<const std::string_view> values, std::string description) {
    Json e = Json::array();
    for (auto v : values) e.push_back(std::string(v));
    return Json{{"type", "string"}, {"enum", e}, {"description", std::move(description)}};
}

Json tool(std::string_view name, std::string description, Json properties, std::vector<std::string> required) {
    Json req = Json::array();
    for (auto& r : required) req.push_back(r);
    return Json{{"name", std::string(name)},
                {"description", std::move(description)},
                {"parameters",
                 Json{{"type", "object"},
                      {"properties", std::move(properties)},
                      {"required", req},
                      {"additionalProperties", false}}}};
}

Json build_schemas() {
    const Json cell_value = Json{{"type", Json::array({"string", "number", "boolean", "null"})}};
    Json tools = Json::array();
    tools.push_back(tool("change_sheet_name", "Updates the sheet name to the new sheet name.",
                         Json{{"from", string_param("Current sheet name; defaults to the first sheet.")},
                              {"to", string_param("New sheet name.")}},
                         {"to"}));
    tools.push_back(tool(
        "create_table",
        "Creates a table within the sheet with the given name and a list of values to include in the table. "
        "Cells starting with '=' are formulas. The table is placed below existing tables without overlapping them.",
        Json{{"name", string_param("Unique table name.")},
             {"kind", enum_param(kKinds, "data for underlying records, insight for summaries of data tables.")},
             {"sheet", string_param("Target sheet; defaults to the first sheet.")},
             {"anchor", string_param("Optional top-left cell of the header row, e.g. A1.")},
             {"columns",
              Json{{"type", "array"},
                   {"description", "Column headers, or {header, type} objects."},
                   {"items",
                    Json{{"anyOf",
                          Json::array({Json{{"type", "string"}},
                                       Json{{"type", "object"},
                                            {"properties",
                                             Json{{"header", Json{{"type", "string"}}},
                                                  {"type", enum_param(kValueTypes, "Column value type.")}}},
                                            {"required", Json::array({"header"})}}})}}}}},
             {"rows",
              Json{{"type", "array"},
                   {"description", "Data rows; each row lists one value per column."},
                   {"items", Json{{"type", "array"}, {"items", cell_value}}}}},
             {"totals",
              Json{{"type", "array"},
                   {"description", "Optional aggregation row kept at the bottom, e.g. [\"Total\", \"=SUM(C2:C7)\"]."},
                   {"items", cell_value}}}},
        {"name", "columns"}));
    tools.push_back(tool("add_chart",
                         "Creates a chart (line, pie, histogram) for the column in a table (for numeric data only).",
                         Json{{"table", string_param("Table name.")},
                              {"column", string_param("Numeric column header.")},
                              {"chartType", enum_param(kChartTypes, "Chart type.")},
                              {"title", string_param("Optional chart title.")}},
                         {"table", "column", "chartType"}));
    tools.push_back(tool("sort_rows", "Sorts the table rows based on the values in the given column.",
                         Json{{"table", string_param("Table name.")},
                              {"column", string_param("Column header to sort by.")},
                              {"ascending", Json{{"type", "boolean"}, {"description", "Defaults to true."}}}},
                         {"table", "column"}));
    tools.push_back(tool("filter_rows",
                         "Filters the table to rows that match the given condition. This does not permanently delete "
                         "rows from the tables.",
                         Json{{"table", string_param("Table name.")},
                              {"column", string_param("Column header the condition applies to.")},
                              {"criteria", string_param("Condition such as \">=100\", \"<>Travel\" or \"2023-04-01\".")}},
                         {"table", "column", "criteria"}));
    tools.push_back(tool("highlight_cell",
                         "Highlights the cell in the color (red, green, or yellow) that match the given condition.",
                         Json{{"table", string_param("Table name.")},
                              {"color", enum_param(kHighlightColors, "Highlight color.")},
                              {"cell", string_param("A single data cell address, e.g. C4 (instead of criteria).")},
                              {"criteria", string_param("Condition such as \">100\".")},
                              {"column", string_param("Limit the condition to this column.")}},
                         {"table", "color"}));
    tools.push_back(tool("highlight_row",
                         "Highlights the entire row in the color (red, green, or yellow) if any value in the row "
                         "matches the condition.",
                         Json{{"table", string_param("Table name.")},
                              {"color", enum_param(kHighlightColors, "Highlight color.")},
                              {"criteria", string_param("Condition such as \"Operational\".")},
                              {"column", string_param("Only test this column instead of every value in the row.")}},
                         {"table", "color", "criteria"}));
    tools.push_back(tool("change_table_color", "Changes the color of the given table.",
                         Json{{"table", string_param("Table name.")},
                              {"color", string_param("One of " + join(kThemeColors) + ", or #RRGGBB.")}},
                         {"table", "color"}));
    return Json{{"schemaVersion", "tools/v1"}, {"tools", tools}};
}

}  // namespace

std::span<const std::string_view> tool_names() { return kToolNames; }

std::span<const std::string_view> table_theme_colors() { return kThemeColors; }

bool is_tool_name(std::string_view name) {
    return std::find(kToolNames.begin(), kToolNames.end(), name) != kToolNames.end();
}

std::string_view to_string(ToolStatus s) {
    switch (s) {
        case ToolStatus::Ok: return "ok";
        case ToolStatus::ValidationError: return "validation_error";
        case ToolStatus::ExecutionError: return "execution_error";
    }
    return "ok";
}

std::optional<ValidationIssue> validate_tool_call(const ToolCall& call, const Workbook& wb) {
    try {
        check(call, wb);
    } catch (const Invalid& inv) {
        return inv.issue;
    } catch (const std::exception& e) {
        return ValidationIssue{"args", std::string("args: ") + e.what()};
    }
    return std::nullopt;
}

ToolResult execute_validated(const ToolCall& call, Workbook& wb) {
    const Workbook before = wb;
    ToolResult result;
    try {
        apply(call, wb, result.message);
        result.status = ToolStatus::Ok;
    } catch (const Invalid& inv) {
        wb.assign(before);
        result.status = ToolStatus::ExecutionError;
        result.message = inv.issue.message;
    } catch (const std::exception& e) {
        wb.assign(before);
        result.status = ToolStatus::ExecutionError;
        result.message = e.what();
    }
    result.revision = wb.revision();
    return result;
}

ToolResult execute_tool(const ToolCall& call, Workbook& wb) {
    if (auto issue = validate_tool_call(call, wb)) {
        return ToolResult{ToolStatus::ValidationError, issue->message, wb.revision(), issue->field};
    }
    return execute_validated(call, wb);
}

const Json& tool_schemas() {
    static const Json schemas = build_schemas();
    return schemas;
}

}  // namespace sheetagent
