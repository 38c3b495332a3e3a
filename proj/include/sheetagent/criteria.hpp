#pragma once

#include <string>
#include <string_view>

#include "sheetagent/value.hpp"

namespace sheetagent {

enum class CriteriaOp { Eq, Ne, Lt, Le, Gt, Ge };

/// Comparison condition used by SUMIFS/COUNTIF and by the filter and highlight tools,
/// e.g. `">=2023-04-01"`, `"Operational"`, `"<>0"`.
struct Criteria {
    CriteriaOp op = CriteriaOp::Eq;
    Value operand;

    /// Total: every string yields some criteria (bare text means Eq).
    static Criteria parse(std::string_view text);

    /// Criteria for a non-text argument, e.g. COUNTIF(A:A, 5).
    static Criteria equal_to(Value v) { return Criteria{CriteriaOp::Eq, std::move(v)}; }

    bool matches(const Value& cell) const;

    /// Canonical text form; `parse(to_string())` reproduces this criteria.
    std::string to_string() const;

    bool operator==(const Criteria&) const = default;
};

std::string_view criteria_op_symbol(CriteriaOp op);

/// Coerces criteria operand text: Number, ISO date, TRUE/FALSE, else Text.
Value coerce_operand(std::string_view text);

}  // namespace sheetagent
