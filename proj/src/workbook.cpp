#include "sheetagent/workbook.hpp"

#include <algorithm>
#include <set>

namespace sheetagent {

std::string_view to_string(TableKind k) { return k == TableKind::Data ? "data" : "insight"; }

std::string_view to_string(ValueType t) {
    switch (t) {
        case ValueType::Text: return "text";
        case ValueType::Number: return "number";
        case ValueType::Currency: return "currency";
        case ValueType::Percent: return "percent";
        case ValueType::Date: return "date";
        case ValueType::Boolean: return "boolean";
    }
    return "text";
}

std::string_view to_string(CellRole r) {
    switch (r) {
        case CellRole::Plain: return "plain";
        case CellRole::AggregationCell: return "aggregation";
        case CellRole::AggregationReferenceCell: return "aggregation_reference";
        case CellRole::TableAggregationCell: return "table_aggregation";
        case CellRole::TransformCell: return "transform";
        case CellRole::ParameterCell: return "parameter";
    }
    return "plain";
}

std::string_view to_string(ChartType t) {
    switch (t) {
        case ChartType::Line: return "line";
        case ChartType::Pie: return "pie";
        case ChartType::Histogram: return "histogram";
    }
    return "line";
}

std::string_view to_string(HighlightColor c) {
    switch (c) {
        case HighlightColor::Red: return "red";
        case HighlightColor::Green: return "green";
        case HighlightColor::Yellow: return "yellow";
    }
    return "yellow";
}

std::string_view to_string(HighlightRule::Scope s) {
    switch (s) {
        case HighlightRule::Scope::SingleCell: return "cell";
        case HighlightRule::Scope::CellsMatching: return "cells_matching";
        case HighlightRule::Scope::RowsMatching: return "rows_matching";
    }
    return "cell";
}

std::optional<TableKind> parse_table_kind(std::string_view s) {
    if (iequals(s, "data")) return TableKind::Data;
    if (iequals(s, "insight")) return TableKind::Insight;
    return std::nullopt;
}

std::optional<ValueType> parse_value_type(std::string_view s) {
    for (auto t : {ValueType::Text, ValueType::Number, ValueType::Currency, ValueType::Percent,
                   ValueType::Date, ValueType::Boolean}) {
        if (iequals(s, to_string(t))) return t;
    }
    return std::nullopt;
}

std::optional<ChartType> parse_chart_type(std::string_view s) {
    for (auto t : {ChartType::Line, ChartType::Pie, ChartType::Histogram}) {
        if (iequals(s, to_string(t))) return t;
    }
    return std::nullopt;
}

std::optional<HighlightColor> parse_highlight_color(std::string_view s) {
    for (auto c : {HighlightColor::Red, HighlightColor::Green, HighlightColor::Yellow}) {
        if (iequals(s, to_string(c))) return c;
    }
    return std::nullopt;
}

bool is_numeric(ValueType t) {
    return t == ValueType::Number || t == ValueType::Currency || t == ValueType::Percent;
}

namespace {

std::optional<double> parse_grouped_number(std::string_view text) {
    std::string digits;
    bool negative = false;
    if (!text.empty() && text.front() == '-') {
        negative = true;
        text.remove_prefix(1);
    }
    if (!text.empty() && text.front() == '$') text.remove_prefix(1);
    for (char c : text) {
        if (c != ',') digits.push_back(c);
    }
    auto v = parse_number(digits);
    if (!v || (!digits.empty() && digits.front() == '-')) return std::nullopt;
    return negative ? -*v : *v;
}

}  // namespace

std::optional<Value> parse_literal(std::string_view text, ValueType type) {
    if (text.empty()) return Value::empty();
    switch (type) {
        case ValueType::Text:
            return Value::text(std::string(text));
        case ValueType::Number:
            if (auto v = parse_number(text)) return Value::number(*v);
            return std::nullopt;
        case ValueType::Currency:
            if (auto v = parse_grouped_number(text)) return Value::number(*v);
            return std::nullopt;
        case ValueType::Percent:
            if (text.back() == '%') {
                if (auto v = parse_number(text.substr(0, text.size() - 1))) return Value::number(*v / 100.0);
                return std::nullopt;
            }
            if (auto v = parse_number(text)) return Value::number(*v);
            return std::nullopt;
        case ValueType::Date:
            if (auto d = Date::parse_iso(text)) return Value::date(*d);
            return std::nullopt;
        case ValueType::Boolean:
            if (iequals(text, "true")) return Value::boolean(true);
            if (iequals(text, "false")) return Value::boolean(false);
            return std::nullopt;
    }
    return std::nullopt;
}

std::optional<std::size_t> Table::find_column(std::string_view header) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (iequals(columns[i].header, header)) return i;
    }
    return std::nullopt;
}

Workbook::Workbook() { sheets_.push_back(Sheet{"Sheet1", {}}); }

Sheet* Workbook::find_sheet(std::string_view name) {
    for (auto& s : sheets_) {
        if (iequals(s.name, name)) return &s;
    }
    return nullptr;
}

const Sheet* Workbook::find_sheet(std::string_view name) const {
    return const_cast<Workbook*>(this)->find_sheet(name);
}

std::optional<std::size_t> Workbook::sheet_index(std::string_view name) const {
    for (std::size_t i = 0; i < sheets_.size(); ++i) {
        if (iequals(sheets_[i].name, name)) return i;
    }
    return std::nullopt;
}

Table* Workbook::find_table(std::string_view name) {
    for (auto& s : sheets_) {
        for (auto& t : s.tables) {
            if (iequals(t.name, name)) return &t;
        }
    }
    return nullptr;
}

const Table* Workbook::find_table(std::string_view name) const {
    return const_cast<Workbook*>(this)->find_table(name);
}

const Sheet* Workbook::sheet_of_table(std::string_view name) const {
    for (const auto& s : sheets_) {
        for (const auto& t : s.tables) {
            if (iequals(t.name, name)) return &s;
        }
    }
    return nullptr;
}

Sheet& Workbook::add_sheet(std::string name) {
    if (name.empty()) throw WorkbookError("sheet name must not be empty");
    if (find_sheet(name)) throw DuplicateName("sheet '" + name + "' already exists");
    sheets_.push_back(Sheet{std::move(name), {}});
    touch();
    return sheets_.back();
}

CellLocation locate(const Sheet& sheet, int column, int row) {
    for (const auto& t : sheet.tables) {
        if (!t.rect().contains(column, row)) continue;
        CellLocation loc;
        loc.table = &t;
        loc.column = static_cast<std::size_t>(column - t.anchor.column);
        if (row > t.anchor.row) loc.row = static_cast<std::size_t>(row - t.anchor.row - 1);
        return loc;
    }
    return {};
}

Table& place_table(Workbook& wb, std::string_view sheet_name, TableSpec spec, CellAddress anchor) {
    Sheet* sheet = wb.find_sheet(sheet_name);
    if (!sheet) throw NotFound("sheet '" + std::string(sheet_name) + "' does not exist");
    if (spec.name.empty()) throw InvalidTable("table name must not be empty");
    if (wb.find_table(spec.name)) throw DuplicateName("table '" + spec.name + "' already exists");
    if (spec.columns.empty()) throw InvalidTable("table needs at least one column");
    std::set<std::string> seen;
    for (const auto& c : spec.columns) {
        if (c.header.empty()) throw InvalidTable("column headers must not be empty");
        if (!seen.insert(to_lower(c.header)).second)
            throw InvalidTable("duplicate column header '" + c.header + "'");
    }
    bool in_aggregate = false;
    for (const auto& r : spec.rows) {
        if (r.cells.size() != spec.columns.size()) throw InvalidTable("row width does not match column count");
        if (in_aggregate && !r.aggregate) throw InvalidTable("aggregate rows must follow the data rows");
        in_aggregate = in_aggregate || r.aggregate;
    }
    if (anchor.column < 1 || anchor.row < 1) throw InvalidTable("anchor out of range");

    Table table;
    table.name = std::move(spec.name);
    table.kind = spec.kind;
    table.anchor = CellAddress{anchor.column, anchor.row, std::nullopt};
    table.columns = std::move(spec.columns);
    table.rows = std::move(spec.rows);
    const Rect r = table.rect();
    if (r.right > kMaxColumn || r.bottom > kMaxRow) throw InvalidTable("table extends past the grid");
    for (const auto& other : sheet->tables) {
        if (other.rect().intersects(r))
            throw OverlapError("table '" + table.name + "' at " + r.to_string() + " overlaps table '" +
                               other.name + "' at " + other.rect().to_string());
    }
    for (auto& row : table.rows) row.hidden = false;
    sheet->tables.push_back(std::move(table));
    wb.touch();
    return sheet->tables.back();
}

CellAddress first_free_anchor(const Sheet& sheet, int width, int height) {
    std::set<int> cols{1}, rows{1};
    for (const auto& t : sheet.tables) {
        cols.insert(t.rect().right + 2);
        rows.insert(t.rect().bottom + 2);
    }
    for (int c : cols) {
        for (int r : rows) {
            const Rect candidate{c, r, c + width - 1, r + height - 1};
            const Rect padded = candidate.inflated(1);
            const bool clear = std::none_of(sheet.tables.begin(), sheet.tables.end(),
                                            [&](const Table& t) { return t.rect().intersects(padded); });
            if (clear) return CellAddress{c, r, std::nullopt};
        }
    }
    // Unreachable: below every table in column A is always free.
    return CellAddress{1, *rows.rbegin(), std::nullopt};
}

namespace {

struct RefRect {
    const Sheet* sheet;
    Rect rect;
    bool single;  // CellRef
};

const Sheet* sheet_of(const Workbook& wb, const Table& table) {
    for (const auto& s : wb.sheets()) {
        for (const auto& t : s.tables) {
            if (&t == &table) return &s;
        }
    }
    return nullptr;
}

std::vector<RefRect> references(const Workbook& wb, const Sheet& context, const Expr& ast) {
    std::vector<RefRect> out;
    visit_nodes(ast, [&](const Expr& e) {
        const Sheet* s = &context;
        if (e.sheet) s = wb.find_sheet(*e.sheet);
        switch (e.kind) {
            case Expr::Kind::CellRef:
                out.push_back({s, {e.start.column, e.start.row, e.start.column, e.start.row}, true});
                break;
            case Expr::Kind::RangeRef:
                out.push_back({s, {e.start.column, e.start.row, e.end.column, e.end.row}, false});
                break;
            case Expr::Kind::ColumnRef:
                out.push_back({s, {e.column, 1, e.column, kMaxRow}, false});
                break;
            default:
                break;
        }
    });
    return out;
}

const Cell* data_cell(const CellLocation& loc) {
    if (!loc.table || !loc.row) return nullptr;
    return &loc.table->rows[*loc.row].cells[loc.column];
}

CellRole classify(const Workbook& wb, const Sheet& sheet, const Table& table, int column, int row, int depth);

CellRole role_at(const Workbook& wb, const Sheet& sheet, int column, int row, int depth) {
    const CellLocation loc = locate(sheet, column, row);
    if (!loc.table || !loc.row) return CellRole::Plain;
    return classify(wb, sheet, *loc.table, column, row, depth + 1);
}

CellRole classify(const Workbook& wb, const Sheet& sheet, const Table& table, int column, int row, int depth) {
    const CellLocation loc = locate(sheet, column, row);
    const Cell* cell = data_cell(loc);
    if (!cell) return CellRole::Plain;
    if (!cell->is_formula()) {
        return table.columns[loc.column].type == ValueType::Boolean ? CellRole::ParameterCell : CellRole::Plain;
    }
    if (depth > 3) return CellRole::Plain;
    const Expr& ast = *cell->formula().ast;
    const auto refs = references(wb, sheet, ast);
    if (refs.empty()) return CellRole::Plain;

    // Aggregates over cells that are themselves references to other tables' aggregates.
    {
        bool any = false, all = true;
        for (const auto& ref : refs) {
            if (!ref.sheet) { all = false; break; }
            for (const auto& t : ref.sheet->tables) {
                const Rect overlap{std::max(t.rect().left, ref.rect.left), std::max(t.rect().top + 1, ref.rect.top),
                                   std::min(t.rect().right, ref.rect.right), std::min(t.rect().bottom, ref.rect.bottom)};
                if (overlap.left > overlap.right || overlap.top > overlap.bottom) continue;
                for (int r = overlap.top; r <= overlap.bottom && all; ++r) {
                    for (int c = overlap.left; c <= overlap.right && all; ++c) {
                        if (ref.sheet == &sheet && c == column && r == row) continue;
                        if (role_at(wb, *ref.sheet, c, r, depth) == CellRole::AggregationReferenceCell) any = true;
                        else all = false;
                    }
                }
            }
            if (!all) break;
        }
        if (any && all) return CellRole::TableAggregationCell;
    }

    const Rect own = table.rect();
    const int data_top = own.top + 1;

    // Aggregates over a range inside its own column.
    {
        bool has_range = false, inside = true;
        for (const auto& ref : refs) {
            if (!ref.single) has_range = true;
            const bool ok = ref.sheet == &sheet && ref.rect.left == column && ref.rect.right == column &&
                            ref.rect.top >= data_top && ref.rect.bottom <= own.bottom &&
                            !(ref.rect.top <= row && row <= ref.rect.bottom);
            if (!ok) { inside = false; break; }
        }
        if (has_range && inside) return CellRole::AggregationCell;
    }

    // A bare link to another table's aggregation cell.
    if (ast.kind == Expr::Kind::CellRef && refs.size() == 1 && refs[0].sheet) {
        const CellLocation target = locate(*refs[0].sheet, ast.start.column, ast.start.row);
        if (target.table && target.table != &table && target.row &&
            role_at(wb, *refs[0].sheet, ast.start.column, ast.start.row, depth) == CellRole::AggregationCell)
            return CellRole::AggregationReferenceCell;
    }

    // Row-level relationship between columns of its own row.
    {
        std::set<int> columns;
        for (const auto& ref : refs) {
            if (ref.single && ref.sheet == &sheet && ref.rect.top == row && own.contains(ref.rect.left, row) &&
                ref.rect.left != column)
                columns.insert(ref.rect.left);
        }
        if (columns.size() >= 2) return CellRole::TransformCell;
    }
    return CellRole::Plain;
}

}  // namespace

CellRole classify_cell_role(const Workbook& wb, const Table& table, const CellAddress& addr) {
    if (!table.rect().contains(addr.column, addr.row))
        throw AddressOutsideTable(addr.to_string() + " is outside table '" + table.name + "' (" +
                                  table.rect().to_string() + ")");
    const Sheet* sheet = sheet_of(wb, table);
    if (!sheet) throw NotFound("table '" + table.name + "' is not part of this workbook");
    return classify(wb, *sheet, table, addr.column, addr.row, 0);
}

void refresh_roles(Workbook& wb) {
    std::vector<std::vector<std::vector<std::vector<CellRole>>>> roles;
    for (const auto& sheet : wb.sheets()) {
        auto& per_sheet = roles.emplace_back();
        for (const auto& t : sheet.tables) {
            auto& per_table = per_sheet.emplace_back();
            for (std::size_t r = 0; r < t.rows.size(); ++r) {
                auto& per_row = per_table.emplace_back();
                for (std::size_t c = 0; c < t.columns.size(); ++c)
                    per_row.push_back(classify(wb, sheet, t, t.grid_column(c), t.grid_row(r), 0));
            }
        }
    }
    for (std::size_t s = 0; s < wb.sheets().size(); ++s) {
        auto& sheet = wb.sheets()[s];
        for (std::size_t t = 0; t < sheet.tables.size(); ++t) {
            auto& table = sheet.tables[t];
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                for (std::size_t c = 0; c < table.columns.size(); ++c) table.rows[r].cells[c].role = roles[s][t][r][c];
            }
        }
    }
}

Snapshot snapshot(const Workbook& wb) { return Snapshot{wb}; }

void restore(Workbook& wb, const Snapshot& snap) {
    wb.sheets() = snap.state.sheets();
    wb.touch();
}

void UndoStack::push(Snapshot s) {
    items_.push_back(std::move(s));
    while (items_.size() > depth_) items_.pop_front();
}

std::optional<Snapshot> UndoStack::pop() {
    if (items_.empty()) return std::nullopt;
    Snapshot s = std::move(items_.back());
    items_.pop_back();
    return s;
}

}  // namespace sheetagent
