#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sheetagent/formula_ast.hpp"
#include "sheetagent/workbook.hpp"

namespace sheetagent {

/// Malformed formula text. `position` is a 0-based offset into the full text,
/// including the leading '='.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t position, const std::string& message)
        : std::runtime_error(message + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Known function called with an unsupported number of arguments.
class ArityError : public ParseError {
public:
    using ParseError::ParseError;
};

/// Functions with defined semantics; any other name evaluates to #NAME?.
bool is_supported_function(std::string_view upper_name);

/// Parses `=...` formula text.
ExprPtr parse_formula(std::string_view text);

/// Canonical text for `ast`, with the leading '='. Reparses to an equal AST.
std::string print_formula(const Expr& ast);

/// Convenience: parse and keep the verbatim source.
Formula make_formula(std::string_view text);

/// Grid position resolved to a sheet index.
struct GridRef {
    std::size_t sheet = 0;
    int column = 1;
    int row = 1;
    auto operator<=>(const GridRef&) const = default;
};

/// Spreadsheet ordering used by comparison operators and sorting: Empty takes the
/// other side's blank, mixed types order Number < Date < Text < Boolean, text is
/// case-insensitive.
std::partial_ordering compare_values(const Value& a, const Value& b);

/// Evaluates against cached cell values. Never throws; failures are Error values.
Value evaluate(const Expr& ast, const Workbook& wb, std::size_t context_sheet);
Value evaluate(const Expr& ast, const Workbook& wb, std::string_view context_sheet);

/// Data cells of a whole-column reference on the context sheet (or the ref's own sheet),
/// excluding header and aggregate rows, ordered by row.
std::vector<CellAddress> resolve_column_ref(const Expr& column_ref, const Workbook& wb,
                                            std::string_view context_sheet);

/// Every grid position evaluation of `ast` may read. Matches `evaluate` exactly.
std::vector<GridRef> collect_reads(const Expr& ast, const Workbook& wb, std::size_t context_sheet);

struct RecalcStats {
    std::size_t evaluations = 0;
    std::size_t cycle_cells = 0;
};

/// Re-evaluates every formula cell in dependency order; cells on a cycle become #CYCLE!.
/// Also refreshes cell roles.
RecalcStats recalculate(Workbook& wb);

/// Rewrites same-row references of a formula that moved from `from_row` to `to_row`
/// inside the column span [left, right]. Absolute rows are left alone.
ExprPtr shift_row_refs(const ExprPtr& ast, int from_row, int to_row, int left, int right);

/// Rewrites sheet qualifiers naming `from` (case-insensitive) to `to`.
ExprPtr rename_sheet_refs(const ExprPtr& ast, std::string_view from, std::string_view to);

}  // namespace sheetagent
