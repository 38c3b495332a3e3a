#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sheetagent/criteria.hpp"
#include "sheetagent/value.hpp"

namespace sheetagent {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinaryOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, Concat };
enum class UnaryOp { Neg, Plus };

/// One corner of a reference. `$` markers are kept so printing is faithful and
/// row moves (sort) leave absolute rows alone.
struct RefPoint {
    int column = 1;
    int row = 1;
    bool abs_column = false;
    bool abs_row = false;
    bool operator==(const RefPoint&) const = default;
};

/// Parsed formula node. Flat tagged struct; only the fields of `kind` are meaningful.
struct Expr {
    enum class Kind { Literal, CellRef, RangeRef, ColumnRef, Unary, Binary, Call, CriteriaLit };

    Kind kind = Kind::Literal;
    Value literal;                      // Literal
    Criteria criteria;                  // CriteriaLit (string literal in a criteria slot)
    std::optional<std::string> sheet;   // CellRef / RangeRef / ColumnRef
    RefPoint start;                     // CellRef, RangeRef (top-left)
    RefPoint end;                       // RangeRef (bottom-right)
    int column = 1;                     // ColumnRef
    BinaryOp binary_op = BinaryOp::Add;
    UnaryOp unary_op = UnaryOp::Neg;
    std::string name;                   // Call, upper-cased
    std::vector<ExprPtr> args;          // Unary: 1, Binary: 2, Call: n
};

/// Pre-order walk over `e` and all descendants.
template <class F>
void visit_nodes(const Expr& e, F&& fn) {
    fn(e);
    for (const auto& a : e.args) visit_nodes(*a, fn);
}

/// Deep structural equality.
bool equal(const Expr& a, const Expr& b);

/// A cell formula: verbatim source plus its parse.
struct Formula {
    std::string source;
    ExprPtr ast;
};

}  // namespace sheetagent
