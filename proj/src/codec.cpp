#include "sheetagent/codec.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "sheetagent/formula.hpp"

namespace sheetagent {

namespace {

Json cell_json(const CellAddress& addr, const Cell& cell) {
    Json out = Json::object();
    out["addr"] = addr.to_string();
    const Value& v = cell.is_formula() ? cell.cached : cell.literal_value();
    out["value"] = v.is_empty() ? Json(nullptr) : Json(v.display());
    out["formula"] = cell.is_formula() ? Json(cell.formula().source) : Json(nullptr);
    return out;
}

Json table_json(const Table& t) {
    Json out = Json::object();
    out["name"] = t.name;
    out["kind"] = std::string(to_string(t.kind));
    out["range"] = t.rect().to_string();
    Json cols = Json::array();
    for (const auto& c : t.columns) cols.push_back(Json{{"header", c.header}, {"type", std::string(to_string(c.type))}});
    out["columns"] = cols;
    out["color"] = t.color;
    out["sort"] = t.sort ? Json{{"column", t.columns[t.sort->column].header}, {"ascending", t.sort->ascending}}
                         : Json(nullptr);
    out["filter"] = t.filter ? Json{{"column", t.columns[t.filter->column].header}, {"criteria", t.filter->source}}
                             : Json(nullptr);
    Json hidden = Json::array(), totals = Json::array();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (t.rows[i].hidden) hidden.push_back(t.grid_row(i));
        if (t.rows[i].aggregate) totals.push_back(t.grid_row(i));
    }
    out["hiddenRows"] = hidden;
    out["totalsRows"] = totals;
    Json charts = Json::array();
    for (const auto& c : t.charts)
        charts.push_back(Json{{"type", std::string(to_string(c.type))}, {"column", c.column}, {"title", c.title}});
    out["charts"] = charts;
    Json highlights = Json::array();
    for (const auto& h : t.highlights) {
        const bool single = h.scope == HighlightRule::Scope::SingleCell;
        Json j = Json::object();
        j["scope"] = std::string(to_string(h.scope));
        j["color"] = std::string(to_string(h.color));
        j["cell"] = single ? Json(h.cell.to_string()) : Json(nullptr);
        j["column"] = h.column.empty() ? Json(nullptr) : Json(h.column);
        j["criteria"] = single ? Json(nullptr) : Json(h.source);
        highlights.push_back(j);
    }
    out["highlights"] = highlights;
    Json cells = Json::array();
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
        cells.push_back(Json{{"addr", CellAddress{t.grid_column(j), t.anchor.row, std::nullopt}.to_string()},
                             {"value", t.columns[j].header},
                             {"formula", nullptr}});
    }
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t j = 0; j < t.columns.size(); ++j) {
            cells.push_back(cell_json(CellAddress{t.grid_column(j), t.grid_row(i), std::nullopt}, t.rows[i].cells[j]));
        }
    }
    out["cells"] = cells;
    return out;
}

// ---------------------------------------------------------------------------
// validation

struct Bad {
    std::string message;
};

[[noreturn]] void bad(const std::string& where, const std::string& what) { throw Bad{where + ": " + what}; }

const Json& field(const Json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object()) bad(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) bad(where, "missing '" + key + "'");
    return *it;
}

std::string str(const Json& obj, const std::string& key, const std::string& where) {
    const Json& v = field(obj, key, where);
    if (!v.is_string()) bad(where + "." + key, "expected a string");
    return v.get<std::string>();
}

std::optional<std::string> opt_str(const Json& obj, const std::string& key, const std::string& where) {
    const Json& v = field(obj, key, where);
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) bad(where + "." + key, "expected a string or null");
    return v.get<std::string>();
}

const Json& arr(const Json& obj, const std::string& key, const std::string& where) {
    const Json& v = field(obj, key, where);
    if (!v.is_array()) bad(where + "." + key, "expected an array");
    return v;
}

void only_keys(const Json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
    for (const auto& [k, v] : obj.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) bad(where, "unexpected key '" + k + "'");
    }
}

std::optional<HighlightRule::Scope> parse_scope(std::string_view s) {
    for (auto scope : {HighlightRule::Scope::SingleCell, HighlightRule::Scope::CellsMatching,
                       HighlightRule::Scope::RowsMatching}) {
        if (s == to_string(scope)) return scope;
    }
    return std::nullopt;
}

std::optional<Rect> parse_range(std::string_view s) {
    const auto colon = s.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto a = CellAddress::parse(s.substr(0, colon));
    auto b = CellAddress::parse(s.substr(colon + 1));
    if (!a || !b || a->sheet || b->sheet || b->column < a->column || b->row < a->row) return std::nullopt;
    return Rect{a->column, a->row, b->column, b->row};
}

/// Parses one table object; with `wb` set it is also materialized there.
void read_table(const Json& tj, const std::string& where, Workbook* wb, const std::string& sheet_name) {
    only_keys(tj,
              {"name", "kind", "range", "columns", "color", "sort", "filter", "hiddenRows", "totalsRows", "charts",
               "highlights", "cells"},
              where);
    TableSpec spec;
    spec.name = str(tj, "name", where);
    auto kind = parse_table_kind(str(tj, "kind", where));
    if (!kind) bad(where + ".kind", "expected data or insight");
    spec.kind = *kind;
    auto rect = parse_range(str(tj, "range", where));
    if (!rect) bad(where + ".range", "expected a range such as A1:D7");

    const Json& cols = arr(tj, "columns", where);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const std::string w = where + ".columns[" + std::to_string(j) + "]";
        only_keys(cols[j], {"header", "type"}, w);
        auto type = parse_value_type(str(cols[j], "type", w));
        if (!type) bad(w + ".type", "unknown column type");
        spec.columns.push_back(ColumnSpec{str(cols[j], "header", w), *type});
    }
    if (static_cast<int>(spec.columns.size()) != rect->right - rect->left + 1)
        bad(where + ".columns", "column count does not match the range");
    const std::size_t height = static_cast<std::size_t>(rect->bottom - rect->top);

    const std::string color = str(tj, "color", where);
    auto column_named = [&](const std::string& header, const std::string& w) {
        for (std::size_t j = 0; j < spec.columns.size(); ++j) {
            if (spec.columns[j].header == header) return j;
        }
        bad(w, "no column '" + header + "'");
    };
    std::optional<SortState> sort;
    if (const Json& s = field(tj, "sort", where); !s.is_null()) {
        only_keys(s, {"column", "ascending"}, where + ".sort");
        const Json& asc = field(s, "ascending", where + ".sort");
        if (!asc.is_boolean()) bad(where + ".sort.ascending", "expected a boolean");
        sort = SortState{column_named(str(s, "column", where + ".sort"), where + ".sort.column"), asc.get<bool>()};
    }
    std::optional<FilterState> filter;
    if (const Json& f = field(tj, "filter", where); !f.is_null()) {
        only_keys(f, {"column", "criteria"}, where + ".filter");
        FilterState fs;
        fs.column = column_named(str(f, "column", where + ".filter"), where + ".filter.column");
        fs.source = str(f, "criteria", where + ".filter");
        fs.criteria = Criteria::parse(fs.source);
        filter = fs;
    }
    auto row_set = [&](const std::string& key) {
        std::set<std::size_t> out;
        for (const auto& r : arr(tj, key, where)) {
            if (!r.is_number_integer() || r.get<int>() <= rect->top || r.get<int>() > rect->bottom)
                bad(where + "." + key, "row outside the table's data rows");
            out.insert(static_cast<std::size_t>(r.get<int>() - rect->top - 1));
        }
        return out;
    };
    const auto hidden = row_set("hiddenRows");
    const auto totals = row_set("totalsRows");
    for (std::size_t i : totals) {
        if (i + totals.size() < height) bad(where + ".totalsRows", "totals rows must be the last rows");
    }

    std::vector<ChartSpec> charts;
    const Json& cj = arr(tj, "charts", where);
    for (std::size_t k = 0; k < cj.size(); ++k) {
        const std::string w = where + ".charts[" + std::to_string(k) + "]";
        only_keys(cj[k], {"type", "column", "title"}, w);
        auto type = parse_chart_type(str(cj[k], "type", w));
        if (!type) bad(w + ".type", "expected line, pie or histogram");
        ChartSpec c;
        c.type = *type;
        c.table = spec.name;
        c.column = spec.columns[column_named(str(cj[k], "column", w), w + ".column")].header;
        c.title = str(cj[k], "title", w);
        charts.push_back(c);
    }
    std::vector<HighlightRule> highlights;
    const Json& hj = arr(tj, "highlights", where);
    for (std::size_t k = 0; k < hj.size(); ++k) {
        const std::string w = where + ".highlights[" + std::to_string(k) + "]";
        only_keys(hj[k], {"scope", "color", "cell", "column", "criteria"}, w);
        HighlightRule h;
        auto scope = parse_scope(str(hj[k], "scope", w));
        if (!scope) bad(w + ".scope", "expected cell, cells_matching or rows_matching");
        h.scope = *scope;
        auto color = parse_highlight_color(str(hj[k], "color", w));
        if (!color) bad(w + ".color", "expected red, green or yellow");
        h.color = *color;
        if (auto col = opt_str(hj[k], "column", w)) h.column = spec.columns[column_named(*col, w + ".column")].header;
        if (h.scope == HighlightRule::Scope::SingleCell) {
            auto cell = opt_str(hj[k], "cell", w);
            auto addr = cell ? CellAddress::parse(*cell) : std::nullopt;
            if (!addr || addr->sheet || !rect->contains(addr->column, addr->row)) bad(w + ".cell", "expected a cell in the table");
            h.cell = *addr;
        } else {
            auto crit = opt_str(hj[k], "criteria", w);
            if (!crit) bad(w + ".criteria", "required for this scope");
            h.source = *crit;
            h.criteria = Criteria::parse(*crit);
        }
        highlights.push_back(h);
    }

    // Cells: every position of the range, row-major.
    const Json& cj2 = arr(tj, "cells", where);
    const std::size_t width = spec.columns.size();
    if (cj2.size() != width * (height + 1)) bad(where + ".cells", "expected one entry per cell of the range");
    spec.rows.assign(height, Row{});
    for (std::size_t k = 0; k < cj2.size(); ++k) {
        const std::string w = where + ".cells[" + std::to_string(k) + "]";
        const Json& c = cj2[k];
        only_keys(c, {"addr", "value", "formula"}, w);
        const std::size_t i = k / width, j = k % width;
        const CellAddress expected{rect->left + static_cast<int>(j), rect->top + static_cast<int>(i), std::nullopt};
        if (str(c, "addr", w) != expected.to_string()) bad(w + ".addr", "expected " + expected.to_string());
        auto value = opt_str(c, "value", w);
        auto formula = opt_str(c, "formula", w);
        if (i == 0) {
            if (formula || value != spec.columns[j].header) bad(w, "header cell must hold the column header");
            continue;
        }
        Row& row = spec.rows[i - 1];
        if (formula) {
            try {
                row.cells.push_back(Cell::formula(make_formula(*formula)));
            } catch (const ParseError& e) {
                bad(w + ".formula", e.what());
            }
        } else {
            auto v = parse_literal(value.value_or(""), spec.columns[j].type);
            if (!v) bad(w + ".value", "not a valid " + std::string(to_string(spec.columns[j].type)) + " value");
            row.cells.push_back(Cell::literal(*v));
        }
    }
    for (std::size_t i = 0; i < spec.rows.size(); ++i) spec.rows[i].aggregate = totals.count(i) > 0;
    if (!wb) return;

    const std::string name = spec.name;
    try {
        place_table(*wb, sheet_name, std::move(spec), CellAddress{rect->left, rect->top, std::nullopt});
    } catch (const WorkbookError& e) {
        bad(where, e.what());
    }
    Table& t = *wb->find_table(name);
    // place_table starts every row visible.
    for (std::size_t i : hidden) t.rows[i].hidden = true;
    t.color = color;
    t.sort = sort;
    t.filter = filter;
    t.charts = std::move(charts);
    t.highlights = std::move(highlights);
}

void read_document(const Json& doc, Workbook* wb) {
    if (!doc.is_object()) bad("$", "expected an object");
    only_keys(doc, {"schemaVersion", "sheets"}, "$");
    if (str(doc, "schemaVersion", "$") != kStateSchemaVersion)
        bad("$.schemaVersion", "expected \"" + std::string(kStateSchemaVersion) + "\"");
    const Json& sheets = arr(doc, "sheets", "$");
    if (sheets.empty()) bad("$.sheets", "a workbook has at least one sheet");
    std::set<std::string> sheet_names, table_names;
    for (std::size_t s = 0; s < sheets.size(); ++s) {
        const std::string where = "$.sheets[" + std::to_string(s) + "]";
        only_keys(sheets[s], {"name", "tables"}, where);
        const std::string name = str(sheets[s], "name", where);
        if (!sheet_names.insert(to_lower(name)).second) bad(where + ".name", "duplicate sheet name");
        if (wb) {
            if (s == 0) wb->sheets().front().name = name;
            else wb->add_sheet(name);
        }
        const Json& tables = arr(sheets[s], "tables", where);
        for (std::size_t t = 0; t < tables.size(); ++t) {
            const std::string tw = where + ".tables[" + std::to_string(t) + "]";
            read_table(tables[t], tw, wb, name);
            if (!table_names.insert(to_lower(str(tables[t], "name", tw))).second)
                bad(tw + ".name", "duplicate table name");
        }
    }
}

// ---------------------------------------------------------------------------
// markdown

std::string escape_cell(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '\\' || c == '|') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string render_row(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) out += " " + escape_cell(c) + " |";
    return out;
}

struct SplitRow {
    std::vector<std::string> cells;
    bool piped = false;  // at least one unescaped '|'
};

SplitRow split_row(std::string_view line) {
    SplitRow out;
    std::string_view s = trim(line);
    if (!s.empty() && s.front() == '|') {
        s.remove_prefix(1);
        out.piped = true;
    }
    std::string cur;
    bool ended_with_pipe = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        ended_with_pipe = false;
        if (c == '\\' && i + 1 < s.size() && (s[i + 1] == '|' || s[i + 1] == '\\')) {
            cur.push_back(s[++i]);
        } else if (c == '|') {
            out.cells.push_back(std::string(trim(cur)));
            cur.clear();
            out.piped = true;
            ended_with_pipe = true;
        } else {
            cur.push_back(c);
        }
    }
    if (!ended_with_pipe) out.cells.push_back(std::string(trim(cur)));
    return out;
}

bool is_delimiter_row(const SplitRow& r) {
    static const std::regex cell(R"(:?-+:?)");
    if (!r.piped || r.cells.empty()) return false;
    return std::all_of(r.cells.begin(), r.cells.end(), [](const std::string& c) { return std::regex_match(c, cell); });
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        start = end + 1;
    }
    return out;
}

std::string title_from(std::string_view line) {
    std::string_view s = trim(line);
    if (!s.empty() && s.front() == '#') {
        while (!s.empty() && s.front() == '#') s.remove_prefix(1);
        s = trim(s);
    } else if (s.size() > 4 && s.substr(0, 2) == "**" && s.substr(s.size() - 2) == "**") {
        s = trim(s.substr(2, s.size() - 4));
    } else if (s.size() > 5 && s.substr(0, 2) == "**" && s.substr(s.size() - 3) == "**:") {
        s = trim(s.substr(2, s.size() - 5));
    } else {
        return "";
    }
    if (!s.empty() && s.back() == ':') s.remove_suffix(1);
    return std::string(trim(s));
}

void csv_field(std::string& out, const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        out += s;
        return;
    }
    out.push_back('"');
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

}  // namespace

Json state_json(const Workbook& wb) {
    Json sheets = Json::array();
    for (const auto& s : wb.sheets()) {
        Json tables = Json::array();
        for (const auto& t : s.tables) tables.push_back(table_json(t));
        sheets.push_back(Json{{"name", s.name}, {"tables", tables}});
    }
    return Json{{"schemaVersion", std::string(kStateSchemaVersion)}, {"sheets", sheets}};
}

std::string serialize_state(const Workbook& wb) {
    return state_json(wb).dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::optional<std::string> validate_state(const Json& doc) {
    try {
        read_document(doc, nullptr);
    } catch (const Bad& b) {
        return b.message;
    }
    return std::nullopt;
}

Workbook deserialize_state(const Json& doc) {
    Workbook wb;
    try {
        read_document(doc, &wb);
    } catch (const Bad& b) {
        throw StateFormatError(b.message);
    }
    recalculate(wb);
    return wb;
}

Workbook parse_state(std::string_view text) {
    Json doc = Json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw StateFormatError("$: not valid JSON");
    return deserialize_state(doc);
}

bool is_formula_source(std::string_view cell) { return cell.size() > 1 && cell.front() == '='; }

std::string render_markdown(const TableProto& proto) {
    std::string out;
    if (!proto.name.empty()) out += "### " + proto.name + "\n\n";
    out += render_row(proto.columns) + "\n|";
    for (std::size_t j = 0; j < proto.columns.size(); ++j) out += " --- |";
    out += "\n";
    for (const auto& row : proto.rows) out += render_row(row) + "\n";
    return out;
}

TableProto parse_markdown(std::string_view text, std::vector<std::string>* warnings) {
    const auto lines = lines_of(text);
    for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
        const SplitRow header = split_row(lines[i]);
        if (!header.piped) continue;
        const SplitRow delim = split_row(lines[i + 1]);
        if (!is_delimiter_row(delim) || delim.cells.size() != header.cells.size()) continue;

        TableProto proto;
        proto.columns = header.cells;
        for (std::size_t k = i; k-- > 0;) {
            if (trim(lines[k]).empty()) continue;
            proto.name = title_from(lines[k]);
            break;
        }
        std::size_t end = i + 2;
        for (; end < lines.size(); ++end) {
            if (trim(lines[end]).empty()) break;
            SplitRow row = split_row(lines[end]);
            if (!row.piped) break;
            if (row.cells.size() != proto.columns.size())
                throw RaggedRow(end + 1, row.cells.size(), proto.columns.size());
            proto.rows.push_back(std::move(row.cells));
        }
        if (warnings) {
            for (std::size_t k = end; k + 1 < lines.size(); ++k) {
                const SplitRow h = split_row(lines[k]), d = split_row(lines[k + 1]);
                if (h.piped && is_delimiter_row(d) && d.cells.size() == h.cells.size()) {
                    warnings->push_back("ignored a second Markdown table starting on line " + std::to_string(k + 1));
                    break;
                }
            }
        }
        return proto;
    }
    throw NoTableFound();
}

TableProto table_proto(const Table& table) {
    TableProto proto;
    proto.name = table.name;
    for (const auto& c : table.columns) proto.columns.push_back(c.header);
    for (const auto& row : table.rows) {
        std::vector<std::string> cells;
        for (const auto& cell : row.cells)
            cells.push_back(cell.is_formula() ? cell.formula().source : cell.literal_value().display());
        proto.rows.push_back(std::move(cells));
    }
    return proto;
}

std::string export_csv(const Table& table) {
    std::string out;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        if (j) out.push_back(',');
        csv_field(out, table.columns[j].header);
    }
    out += "\r\n";
    for (const auto& row : table.rows) {
        if (row.hidden) continue;
        for (std::size_t j = 0; j < row.cells.size(); ++j) {
            if (j) out.push_back(',');
            const Value& v = row.cells[j].cached;
            csv_field(out, v.is_empty() ? std::string() : v.display());
        }
        out += "\r\n";
    }
    return out;
}

}  // namespace sheetagent
