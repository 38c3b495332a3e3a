#include "sheetagent/criteria.hpp"

#include <array>
#include <utility>

namespace sheetagent {

std::string_view criteria_op_symbol(CriteriaOp op) {
    switch (op) {
        case CriteriaOp::Eq: return "=";
        case CriteriaOp::Ne: return "<>";
        case CriteriaOp::Lt: return "<";
        case CriteriaOp::Le: return "<=";
        case CriteriaOp::Gt: return ">";
        case CriteriaOp::Ge: return ">=";
    }
    return "=";
}

Value coerce_operand(std::string_view text) {
    if (text.empty()) return Value::empty();
    if (auto n = parse_number(text)) return Value::number(*n);
    if (auto d = Date::parse_iso(text)) return Value::date(*d);
    if (iequals(text, "TRUE")) return Value::boolean(true);
    if (iequals(text, "FALSE")) return Value::boolean(false);
    return Value::text(std::string(text));
}

Criteria Criteria::parse(std::string_view text) {
    // Longest prefix first.
    static constexpr std::array<std::pair<std::string_view, CriteriaOp>, 6> kPrefixes{{
        {">=", CriteriaOp::Ge},
        {"<=", CriteriaOp::Le},
        {"<>", CriteriaOp::Ne},
        {">", CriteriaOp::Gt},
        {"<", CriteriaOp::Lt},
        {"=", CriteriaOp::Eq},
    }};
    for (const auto& [prefix, op] : kPrefixes) {
        if (text.substr(0, prefix.size()) == prefix) {
            return Criteria{op, coerce_operand(text.substr(prefix.size()))};
        }
    }
    return Criteria{CriteriaOp::Eq, coerce_operand(text)};
}

namespace {

bool equal_match(const Value& operand, const Value& cell) {
    switch (operand.type()) {
        case Value::Type::Empty:
            return cell.is_empty() || (cell.is_text() && cell.as_text().empty());
        case Value::Type::Text:
            return cell.is_text() && iequals(cell.as_text(), operand.as_text());
        case Value::Type::Number:
            return cell.is_number() && cell.as_number() == operand.as_number();
        case Value::Type::Date:
            return cell.is_date() && cell.as_date() == operand.as_date();
        case Value::Type::Boolean:
            return cell.is_boolean() && cell.as_boolean() == operand.as_boolean();
        case Value::Type::Error:
            return cell.is_error() && cell.as_error() == operand.as_error();
    }
    return false;
}

// Three-way comparison of cell against operand, or nullopt when the types are incomparable.
std::optional<std::partial_ordering> order(const Value& cell, const Value& operand) {
    switch (operand.type()) {
        case Value::Type::Number:
            if (!cell.is_number()) return std::nullopt;
            return cell.as_number() <=> operand.as_number();
        case Value::Type::Date:
            if (!cell.is_date()) return std::nullopt;
            return cell.as_date() <=> operand.as_date();
        case Value::Type::Boolean:
            if (!cell.is_boolean()) return std::nullopt;
            return cell.as_boolean() <=> operand.as_boolean();
        case Value::Type::Empty:
        case Value::Type::Text: {
            if (!cell.is_text()) return std::nullopt;
            const std::string rhs = operand.is_text() ? to_lower(operand.as_text()) : std::string{};
            return to_lower(cell.as_text()) <=> rhs;
        }
        case Value::Type::Error:
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

bool Criteria::matches(const Value& cell) const {
    switch (op) {
        case CriteriaOp::Eq: return equal_match(operand, cell);
        case CriteriaOp::Ne: return !equal_match(operand, cell);
        default: break;
    }
    auto cmp = order(cell, operand);
    if (!cmp) return false;
    switch (op) {
        case CriteriaOp::Lt: return *cmp < 0;
        case CriteriaOp::Le: return *cmp <= 0;
        case CriteriaOp::Gt: return *cmp > 0;
        case CriteriaOp::Ge: return *cmp >= 0;
        default: return false;
    }
}

std::string Criteria::to_string() const {
    const std::string body = operand.display();
    if (op != CriteriaOp::Eq) return std::string(criteria_op_symbol(op)) + body;
    if (!body.empty() && (body.front() == '=' || body.front() == '<' || body.front() == '>'))
        return "=" + body;
    return body;
}

}  // namespace sheetagent
