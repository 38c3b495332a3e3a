#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sheetagent/address.hpp"
#include "sheetagent/criteria.hpp"
#include "sheetagent/formula_ast.hpp"
#include "sheetagent/value.hpp"

namespace sheetagent {

enum class TableKind { Data, Insight };
enum class ValueType { Text, Number, Currency, Percent, Date, Boolean };
enum class CellRole {
    Plain,
    AggregationCell,
    AggregationReferenceCell,
    TableAggregationCell,
    TransformCell,
    ParameterCell,
};
enum class ChartType { Line, Pie, Histogram };
enum class HighlightColor { Red, Green, Yellow };

std::string_view to_string(TableKind k);
std::string_view to_string(ValueType t);
std::string_view to_string(CellRole r);
std::string_view to_string(ChartType t);
std::string_view to_string(HighlightColor c);
std::optional<TableKind> parse_table_kind(std::string_view s);
std::optional<ValueType> parse_value_type(std::string_view s);
std::optional<ChartType> parse_chart_type(std::string_view s);
std::optional<HighlightColor> parse_highlight_color(std::string_view s);

bool is_numeric(ValueType t);

/// Parses literal cell text according to a column type; nullopt when it does not fit.
/// Empty text is Empty for every type.
std::optional<Value> parse_literal(std::string_view text, ValueType type);

struct ColumnSpec {
    std::string header;
    ValueType type = ValueType::Text;
    bool operator==(const ColumnSpec&) const = default;
};

struct Cell {
    std::variant<Value, Formula> content;
    Value cached;
    CellRole role = CellRole::Plain;

    static Cell literal(Value v) {
        Cell c;
        c.cached = v;
        c.content = std::move(v);
        return c;
    }
    static Cell formula(Formula f) {
        Cell c;
        c.content = std::move(f);
        return c;
    }

    bool is_formula() const { return std::holds_alternative<Formula>(content); }
    const Formula& formula() const { return std::get<Formula>(content); }
    const Value& literal_value() const { return std::get<Value>(content); }
};

struct Row {
    std::vector<Cell> cells;
    /// Aggregation (totals) row: pinned below the data rows, excluded from whole-column refs.
    bool aggregate = false;
    /// Set only by an active filter.
    bool hidden = false;
};

struct SortState {
    std::size_t column = 0;
    bool ascending = true;
};

struct FilterState {
    std::size_t column = 0;
    std::string source;
    Criteria criteria;
};

struct ChartSpec {
    ChartType type = ChartType::Pie;
    std::string table;
    std::string column;
    std::string title;
};

struct HighlightRule {
    enum class Scope { SingleCell, CellsMatching, RowsMatching };
    Scope scope = Scope::SingleCell;
    CellAddress cell;          // SingleCell
    std::string column;        // CellsMatching/RowsMatching; empty = any column
    std::string source;        // criteria text as given
    Criteria criteria;
    HighlightColor color = HighlightColor::Yellow;
};

std::string_view to_string(HighlightRule::Scope s);

/// Grid-anchored table: header row at `anchor`, data rows below, aggregate rows last.
struct Table {
    std::string name;
    TableKind kind = TableKind::Data;
    CellAddress anchor;  // sheet unset
    std::vector<ColumnSpec> columns;
    std::vector<Row> rows;
    std::string color = "blue";
    std::optional<SortState> sort;
    std::optional<FilterState> filter;
    std::vector<ChartSpec> charts;
    std::vector<HighlightRule> highlights;

    int width() const { return static_cast<int>(columns.size()); }
    int height() const { return 1 + static_cast<int>(rows.size()); }
    Rect rect() const {
        return {anchor.column, anchor.row, anchor.column + width() - 1, anchor.row + height() - 1};
    }
    /// Grid row of data row `index`.
    int grid_row(std::size_t index) const { return anchor.row + 1 + static_cast<int>(index); }
    int grid_column(std::size_t index) const { return anchor.column + static_cast<int>(index); }

    /// Case-insensitive header lookup.
    std::optional<std::size_t> find_column(std::string_view header) const;
};

struct Sheet {
    std::string name;
    std::vector<Table> tables;
};

/// What occupies a grid position.
struct CellLocation {
    const Table* table = nullptr;
    std::size_t column = 0;
    /// nullopt for the header row.
    std::optional<std::size_t> row;
};

class WorkbookError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class OverlapError : public WorkbookError {
public:
    using WorkbookError::WorkbookError;
};
class DuplicateName : public WorkbookError {
public:
    using WorkbookError::WorkbookError;
};
class NotFound : public WorkbookError {
public:
    using WorkbookError::WorkbookError;
};
class AddressOutsideTable : public WorkbookError {
public:
    using WorkbookError::WorkbookError;
};
class InvalidTable : public WorkbookError {
public:
    using WorkbookError::WorkbookError;
};

/// Input to `place_table`.
struct TableSpec {
    std::string name;
    TableKind kind = TableKind::Data;
    std::vector<ColumnSpec> columns;
    std::vector<Row> rows;
};

class Workbook {
public:
    /// A fresh workbook has one empty sheet named "Sheet1".
    Workbook();

    std::vector<Sheet>& sheets() { return sheets_; }
    const std::vector<Sheet>& sheets() const { return sheets_; }
    std::uint64_t revision() const { return revision_; }

    /// Records a mutation.
    void touch() { ++revision_; }

    Sheet* find_sheet(std::string_view name);
    const Sheet* find_sheet(std::string_view name) const;
    std::optional<std::size_t> sheet_index(std::string_view name) const;

    Table* find_table(std::string_view name);
    const Table* find_table(std::string_view name) const;
    /// Sheet holding the named table.
    const Sheet* sheet_of_table(std::string_view name) const;

    Sheet& add_sheet(std::string name);

    /// Restores content and revision from another workbook (tool rollback).
    void assign(const Workbook& other) { *this = other; }

private:
    std::vector<Sheet> sheets_;
    std::uint64_t revision_ = 0;
};

CellLocation locate(const Sheet& sheet, int column, int row);

/// Materializes `spec` on `sheet_name` with its header at `anchor`.
/// Throws NotFound, DuplicateName, OverlapError or InvalidTable.
Table& place_table(Workbook& wb, std::string_view sheet_name, TableSpec spec, CellAddress anchor);

/// First anchor on `sheet` where a `width` x `height` rectangle keeps a one-cell gap
/// from every existing table. Columns are scanned left to right, rows top to bottom.
CellAddress first_free_anchor(const Sheet& sheet, int width, int height);

/// Role of the cell at grid address `addr` (sheet of `table`). Throws AddressOutsideTable.
CellRole classify_cell_role(const Workbook& wb, const Table& table, const CellAddress& addr);

/// Recomputes every cell's stored role.
void refresh_roles(Workbook& wb);

struct Snapshot {
    Workbook state;
};

Snapshot snapshot(const Workbook& wb);
/// Restores content; the revision still moves forward.
void restore(Workbook& wb, const Snapshot& snap);

/// Bounded LIFO of snapshots; pushing past capacity drops the oldest.
class UndoStack {
public:
    static constexpr std::size_t kDefaultDepth = 50;

    explicit UndoStack(std::size_t depth = kDefaultDepth) : depth_(depth) {}

    void push(Snapshot s);
    std::optional<Snapshot> pop();
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    std::size_t depth() const { return depth_; }
    /// Oldest retained entry.
    const Snapshot& bottom() const { return items_.front(); }

private:
    std::size_t depth_;
    std::deque<Snapshot> items_;
};

}  // namespace sheetagent
