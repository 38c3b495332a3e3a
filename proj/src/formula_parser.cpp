#include <algorithm>
#include <cctype>

#include "sheetagent/formula.hpp"

namespace sheetagent {

namespace {

constexpr std::string_view kSupported[] = {"SUM",   "AVERAGE", "COUNT",   "MIN",     "MAX",
                                           "IF",    "SUMIF",   "SUMIFS",  "COUNTIF", "COUNTIFS"};

bool is_criteria_slot(std::string_view fn, std::size_t index) {
    if (fn == "SUMIF" || fn == "COUNTIF") return index == 1;
    if (fn == "SUMIFS") return index >= 2 && index % 2 == 0;
    if (fn == "COUNTIFS") return index % 2 == 1;
    return false;
}

void check_arity(std::string_view fn, std::size_t n, std::size_t pos) {
    auto fail = [&](std::string_view expected) {
        throw ArityError(pos, std::string(fn) + " expects " + std::string(expected) + " arguments, got " +
                                  std::to_string(n));
    };
    if (fn == "IF" && (n < 2 || n > 3)) fail("2 or 3");
    if (fn == "SUMIF" && (n < 2 || n > 3)) fail("2 or 3");
    if (fn == "COUNTIF" && n != 2) fail("exactly 2");
    if (fn == "SUMIFS" && (n < 3 || n % 2 == 0)) fail("an odd count of at least 3");
    if (fn == "COUNTIFS" && (n < 2 || n % 2 == 1)) fail("an even count of at least 2");
    if ((fn == "SUM" || fn == "AVERAGE" || fn == "COUNT" || fn == "MIN" || fn == "MAX") && n < 1)
        fail("at least 1");
}

std::shared_ptr<Expr> node(Expr::Kind kind) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    return e;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    ExprPtr parse() {
        if (text_.empty() || text_.front() != '=') throw ParseError(0, "formula must start with '='");
        pos_ = 1;
        ExprPtr e = comparison();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError(pos_, "unexpected '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool at_end() {
        skip_ws();
        return pos_ >= text_.size();
    }
    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }
    bool accept(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }
    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError(pos_, std::string("expected '") + c + "' but reached end of formula");
        if (text_[pos_] != c)
            throw ParseError(pos_, std::string("expected '") + c + "' but found '" + text_[pos_] + "'");
        ++pos_;
    }

    static ExprPtr binary(BinaryOp op, ExprPtr l, ExprPtr r) {
        auto e = node(Expr::Kind::Binary);
        e->binary_op = op;
        e->args = {std::move(l), std::move(r)};
        return e;
    }

    ExprPtr comparison() {
        ExprPtr left = concat();
        for (;;) {
            BinaryOp op;
            if (accept("<>")) op = BinaryOp::Ne;
            else if (accept("<=")) op = BinaryOp::Le;
            else if (accept(">=")) op = BinaryOp::Ge;
            else if (accept("<")) op = BinaryOp::Lt;
            else if (accept(">")) op = BinaryOp::Gt;
            else if (accept("=")) op = BinaryOp::Eq;
            else return left;
            left = binary(op, left, concat());
        }
    }

    ExprPtr concat() {
        ExprPtr left = additive();
        while (accept("&")) left = binary(BinaryOp::Concat, left, additive());
        return left;
    }

    ExprPtr additive() {
        ExprPtr left = term();
        for (;;) {
            if (accept("+")) left = binary(BinaryOp::Add, left, term());
            else if (accept("-")) left = binary(BinaryOp::Sub, left, term());
            else return left;
        }
    }

    ExprPtr term() {
        ExprPtr left = unary();
        for (;;) {
            if (accept("*")) left = binary(BinaryOp::Mul, left, unary());
            else if (accept("/")) left = binary(BinaryOp::Div, left, unary());
            else return left;
        }
    }

    ExprPtr unary() {
        if (accept("-")) {
            auto e = node(Expr::Kind::Unary);
            e->unary_op = UnaryOp::Neg;
            e->args = {unary()};
            return e;
        }
        if (accept("+")) {
            auto e = node(Expr::Kind::Unary);
            e->unary_op = UnaryOp::Plus;
            e->args = {unary()};
            return e;
        }
        return primary();
    }

    ExprPtr primary() {
        if (at_end()) throw ParseError(pos_, "expected an expression but reached end of formula");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            ExprPtr inner = comparison();
            expect(')');
            return inner;
        }
        if (c == '"') return string_literal();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number_literal();
        if (c == '\'') {
            const std::size_t start = pos_;
            std::string sheet = quoted_sheet();
            return reference(start, std::move(sheet));
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '$' || c == '_') return word();
        throw ParseError(pos_, std::string("unexpected '") + c + "'");
    }

    ExprPtr string_literal() {
        const std::size_t start = pos_;
        ++pos_;
        std::string out;
        for (;;) {
            if (pos_ >= text_.size()) throw ParseError(start, "unterminated string literal");
            const char c = text_[pos_++];
            if (c == '"') {
                if (pos_ < text_.size() && text_[pos_] == '"') {
                    out.push_back('"');
                    ++pos_;
                    continue;
                }
                break;
            }
            out.push_back(c);
        }
        auto e = node(Expr::Kind::Literal);
        e->literal = Value::text(std::move(out));
        return e;
    }

    ExprPtr number_literal() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
        }
        auto v = parse_number(text_.substr(start, pos_ - start));
        if (!v) throw ParseError(start, "malformed number '" + std::string(text_.substr(start, pos_ - start)) + "'");
        auto e = node(Expr::Kind::Literal);
        e->literal = Value::number(*v);
        return e;
    }

    std::string quoted_sheet() {
        const std::size_t start = pos_;
        ++pos_;
        std::string name;
        for (;;) {
            if (pos_ >= text_.size()) throw ParseError(start, "unterminated sheet name");
            const char c = text_[pos_++];
            if (c == '\'') {
                if (pos_ < text_.size() && text_[pos_] == '\'') {
                    name.push_back('\'');
                    ++pos_;
                    continue;
                }
                break;
            }
            name.push_back(c);
        }
        if (name.empty()) throw ParseError(start, "empty sheet name");
        if (pos_ >= text_.size() || text_[pos_] != '!') throw ParseError(pos_, "expected '!' after sheet name");
        ++pos_;
        return name;
    }

    std::string_view scan_word() {
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const auto ch = static_cast<unsigned char>(text_[pos_]);
            if (std::isalnum(ch) || ch == '_' || ch == '.' || ch == '$') ++pos_;
            else break;
        }
        return text_.substr(start, pos_ - start);
    }

    ExprPtr word() {
        const std::size_t start = pos_;
        std::string_view w = scan_word();
        if (pos_ < text_.size() && text_[pos_] == '!') {
            ++pos_;
            if (w.find('$') != std::string_view::npos) throw ParseError(start, "invalid sheet name");
            return reference(start, std::string(w));
        }
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(' && w.find('$') == std::string_view::npos) {
            return call(start, to_upper(w));
        }
        if (iequals(w, "TRUE") || iequals(w, "FALSE")) {
            auto e = node(Expr::Kind::Literal);
            e->literal = Value::boolean(iequals(w, "TRUE"));
            return e;
        }
        pos_ = start;
        return reference(start, std::nullopt);
    }

    struct Corner {
        RefPoint point;
        bool has_row;
    };

    // `$A$1`, `A1`, or (column only) `A` / `$A`.
    std::optional<Corner> corner() {
        std::size_t p = pos_;
        RefPoint rp;
        if (p < text_.size() && text_[p] == '$') {
            rp.abs_column = true;
            ++p;
        }
        const std::size_t letters = p;
        while (p < text_.size() && std::isalpha(static_cast<unsigned char>(text_[p]))) ++p;
        auto col = column_index(text_.substr(letters, p - letters));
        if (!col) return std::nullopt;
        rp.column = *col;
        std::size_t q = p;
        if (q < text_.size() && text_[q] == '$') {
            rp.abs_row = true;
            ++q;
        }
        const std::size_t digits = q;
        long row = 0;
        while (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
            row = row * 10 + (text_[q] - '0');
            if (row > kMaxRow) return std::nullopt;
            ++q;
        }
        if (q == digits) {
            if (rp.abs_row) return std::nullopt;
            pos_ = p;
            return Corner{rp, false};
        }
        if (text_[digits] == '0') return std::nullopt;
        rp.row = static_cast<int>(row);
        pos_ = q;
        return Corner{rp, true};
    }

    bool word_continues() const {
        if (pos_ >= text_.size()) return false;
        const auto ch = static_cast<unsigned char>(text_[pos_]);
        return std::isalnum(ch) || ch == '_' || ch == '.' || ch == '$' || ch == '(';
    }

    ExprPtr reference(std::size_t start, std::optional<std::string> sheet) {
        const std::size_t ref_start = pos_;
        auto first = corner();
        if (!first || word_continues()) {
            pos_ = ref_start;
            std::string_view w = scan_word();
            throw ParseError(start, "unknown name '" + std::string(w.empty() ? text_.substr(start, 1) : w) + "'");
        }
        if (pos_ < text_.size() && text_[pos_] == ':') {
            const std::size_t colon = pos_;
            ++pos_;
            auto second = corner();
            if (!second || word_continues()) throw ParseError(colon + 1, "malformed range");
            if (first->has_row != second->has_row) throw ParseError(colon + 1, "malformed range");
            if (!first->has_row) {
                if (first->point.column != second->point.column)
                    throw ParseError(ref_start, "multi-column references are not supported");
                auto e = node(Expr::Kind::ColumnRef);
                e->sheet = std::move(sheet);
                e->column = first->point.column;
                e->start = first->point;
                return e;
            }
            auto e = node(Expr::Kind::RangeRef);
            e->sheet = std::move(sheet);
            RefPoint a = first->point, b = second->point;
            if (a.column > b.column) {
                std::swap(a.column, b.column);
                std::swap(a.abs_column, b.abs_column);
            }
            if (a.row > b.row) {
                std::swap(a.row, b.row);
                std::swap(a.abs_row, b.abs_row);
            }
            e->start = a;
            e->end = b;
            return e;
        }
        if (!first->has_row) {
            pos_ = ref_start;
            std::string_view w = scan_word();
            throw ParseError(start, "unknown name '" + std::string(w) + "'");
        }
        auto e = node(Expr::Kind::CellRef);
        e->sheet = std::move(sheet);
        e->start = first->point;
        return e;
    }

    ExprPtr call(std::size_t start, std::string name) {
        expect('(');
        auto e = node(Expr::Kind::Call);
        e->name = name;
        if (peek() != ')') {
            for (;;) {
                ExprPtr arg = comparison();
                if (is_criteria_slot(name, e->args.size()) && arg->kind == Expr::Kind::Literal &&
                    arg->literal.is_text()) {
                    auto crit = node(Expr::Kind::CriteriaLit);
                    crit->criteria = Criteria::parse(arg->literal.as_text());
                    arg = crit;
                }
                e->args.push_back(std::move(arg));
                if (accept(",")) continue;
                break;
            }
        }
        expect(')');
        check_arity(name, e->args.size(), start);
        return e;
    }
};

int precedence(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Binary:
            switch (e.binary_op) {
                case BinaryOp::Eq: case BinaryOp::Ne: case BinaryOp::Lt:
                case BinaryOp::Le: case BinaryOp::Gt: case BinaryOp::Ge:
                    return 1;
                case BinaryOp::Concat: return 2;
                case BinaryOp::Add: case BinaryOp::Sub: return 3;
                case BinaryOp::Mul: case BinaryOp::Div: return 4;
            }
            return 1;
        case Expr::Kind::Unary: return 5;
        default: return 6;
    }
}

std::string_view op_text(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        case BinaryOp::Eq: return "=";
        case BinaryOp::Ne: return "<>";
        case BinaryOp::Lt: return "<";
        case BinaryOp::Le: return "<=";
        case BinaryOp::Gt: return ">";
        case BinaryOp::Ge: return ">=";
        case BinaryOp::Concat: return "&";
    }
    return "+";
}

std::string quote_string(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string point_text(const RefPoint& p) {
    std::string out;
    if (p.abs_column) out += "$";
    out += column_letters(p.column);
    if (p.abs_row) out += "$";
    out += std::to_string(p.row);
    return out;
}

void print(const Expr& e, std::string& out) {
    auto prefix = [&] {
        if (e.sheet) out += quote_sheet_name(*e.sheet) + "!";
    };
    switch (e.kind) {
        case Expr::Kind::Literal:
            if (e.literal.is_text()) out += quote_string(e.literal.as_text());
            else if (e.literal.is_number() && e.literal.as_number() < 0) out += "(" + e.literal.display() + ")";
            else out += e.literal.display();
            return;
        case Expr::Kind::CriteriaLit:
            out += quote_string(e.criteria.to_string());
            return;
        case Expr::Kind::CellRef:
            prefix();
            out += point_text(e.start);
            return;
        case Expr::Kind::RangeRef:
            prefix();
            out += point_text(e.start) + ":" + point_text(e.end);
            return;
        case Expr::Kind::ColumnRef: {
            prefix();
            const std::string d = e.start.abs_column ? "$" : "";
            out += d + column_letters(e.column) + ":" + d + column_letters(e.column);
            return;
        }
        case Expr::Kind::Unary: {
            out += e.unary_op == UnaryOp::Neg ? "-" : "+";
            const bool paren = precedence(*e.args[0]) < 5;
            if (paren) out += "(";
            print(*e.args[0], out);
            if (paren) out += ")";
            return;
        }
        case Expr::Kind::Binary: {
            const int p = precedence(e);
            const bool lp = precedence(*e.args[0]) < p;
            const bool rp = precedence(*e.args[1]) <= p;
            if (lp) out += "(";
            print(*e.args[0], out);
            if (lp) out += ")";
            out += op_text(e.binary_op);
            if (rp) out += "(";
            print(*e.args[1], out);
            if (rp) out += ")";
            return;
        }
        case Expr::Kind::Call:
            out += e.name + "(";
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                print(*e.args[i], out);
            }
            out += ")";
            return;
    }
}

}  // namespace

bool is_supported_function(std::string_view upper_name) {
    return std::find(std::begin(kSupported), std::end(kSupported), upper_name) != std::end(kSupported);
}

ExprPtr parse_formula(std::string_view text) { return Parser(text).parse(); }

std::string print_formula(const Expr& ast) {
    std::string out = "=";
    print(ast, out);
    return out;
}

Formula make_formula(std::string_view text) { return Formula{std::string(text), parse_formula(text)}; }

bool equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::Literal:
            if (!(a.literal == b.literal)) return false;
            break;
        case Expr::Kind::CriteriaLit:
            if (!(a.criteria == b.criteria)) return false;
            break;
        case Expr::Kind::CellRef:
            if (a.sheet != b.sheet || !(a.start == b.start)) return false;
            break;
        case Expr::Kind::RangeRef:
            if (a.sheet != b.sheet || !(a.start == b.start) || !(a.end == b.end)) return false;
            break;
        case Expr::Kind::ColumnRef:
            if (a.sheet != b.sheet || a.column != b.column || a.start.abs_column != b.start.abs_column) return false;
            break;
        case Expr::Kind::Unary:
            if (a.unary_op != b.unary_op) return false;
            break;
        case Expr::Kind::Binary:
            if (a.binary_op != b.binary_op) return false;
            break;
        case Expr::Kind::Call:
            if (a.name != b.name) return false;
            break;
    }
    if (a.args.size() != b.args.size()) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (!equal(*a.args[i], *b.args[i])) return false;
    }
    return true;
}

ExprPtr shift_row_refs(const ExprPtr& ast, int from_row, int to_row, int left, int right) {
    auto copy = std::make_shared<Expr>(*ast);
    auto in_span = [&](const RefPoint& p) { return p.column >= left && p.column <= right; };
    if (!copy->sheet) {
        if (copy->kind == Expr::Kind::CellRef && !copy->start.abs_row && copy->start.row == from_row &&
            in_span(copy->start))
            copy->start.row = to_row;
        if (copy->kind == Expr::Kind::RangeRef && copy->start.row == from_row && copy->end.row == from_row &&
            !copy->start.abs_row && !copy->end.abs_row && in_span(copy->start) && in_span(copy->end)) {
            copy->start.row = to_row;
            copy->end.row = to_row;
        }
    }
    for (auto& a : copy->args) a = shift_row_refs(a, from_row, to_row, left, right);
    return copy;
}

ExprPtr rename_sheet_refs(const ExprPtr& ast, std::string_view from, std::string_view to) {
    auto copy = std::make_shared<Expr>(*ast);
    if (copy->sheet && iequals(*copy->sheet, from)) copy->sheet = std::string(to);
    for (auto& a : copy->args) a = rename_sheet_refs(a, from, to);
    return copy;
}

}  // namespace sheetagent
