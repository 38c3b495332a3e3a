#include <algorithm>
#include <functional>
#include <map>

#include "sheetagent/formula.hpp"

namespace sheetagent {

namespace {

enum class CondKind { None, SumIf, SumIfs, CountIf, CountIfs };

CondKind cond_kind(std::string_view name) {
    if (name == "SUMIF") return CondKind::SumIf;
    if (name == "SUMIFS") return CondKind::SumIfs;
    if (name == "COUNTIF") return CondKind::CountIf;
    if (name == "COUNTIFS") return CondKind::CountIfs;
    return CondKind::None;
}

bool is_reference(const Expr& e) {
    return e.kind == Expr::Kind::CellRef || e.kind == Expr::Kind::RangeRef || e.kind == Expr::Kind::ColumnRef;
}

/// Argument layout of a conditional aggregate: which args are ranges, which are criteria,
/// and which range drives the row alignment.
struct CondLayout {
    std::size_t driving = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (range arg, criteria arg)
    std::optional<std::size_t> sum;                          // summed range arg
};

CondLayout layout_of(CondKind kind, std::size_t argc) {
    CondLayout l;
    switch (kind) {
        case CondKind::SumIf:
            l.driving = 0;
            l.pairs = {{0, 1}};
            l.sum = argc == 3 ? std::optional<std::size_t>{2} : std::optional<std::size_t>{0};
            break;
        case CondKind::CountIf:
            l.driving = 0;
            l.pairs = {{0, 1}};
            break;
        case CondKind::SumIfs:
            l.driving = 0;
            l.sum = 0;
            for (std::size_t i = 1; i + 1 < argc; i += 2) l.pairs.emplace_back(i, i + 1);
            break;
        case CondKind::CountIfs:
            l.driving = 0;
            for (std::size_t i = 0; i + 1 < argc; i += 2) l.pairs.emplace_back(i, i + 1);
            break;
        case CondKind::None:
            break;
    }
    return l;
}

class Evaluator {
public:
    Evaluator(const Workbook& wb, std::size_t sheet) : wb_(wb), sheet_(sheet) {}

    std::optional<std::size_t> target_sheet(const Expr& e) const {
        if (!e.sheet) return sheet_;
        return wb_.sheet_index(*e.sheet);
    }

    std::vector<GridRef> column_cells(std::size_t sheet, int column) const {
        std::vector<GridRef> out;
        for (const auto& t : wb_.sheets()[sheet].tables) {
            const Rect r = t.rect();
            if (column < r.left || column > r.right) continue;
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
                if (t.rows[i].aggregate) continue;
                out.push_back(GridRef{sheet, column, t.grid_row(i)});
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Cells named by a reference expression; nullopt when its sheet is gone.
    std::optional<std::vector<GridRef>> range_cells(const Expr& e) const {
        auto s = target_sheet(e);
        if (!s) return std::nullopt;
        std::vector<GridRef> out;
        switch (e.kind) {
            case Expr::Kind::CellRef:
                out.push_back({*s, e.start.column, e.start.row});
                break;
            case Expr::Kind::RangeRef:
                for (int r = e.start.row; r <= e.end.row; ++r) {
                    for (int c = e.start.column; c <= e.end.column; ++c) out.push_back({*s, c, r});
                }
                break;
            case Expr::Kind::ColumnRef:
                out = column_cells(*s, e.column);
                break;
            default:
                break;
        }
        return out;
    }

    /// Cells of `other` paired with `driving`: whole columns by grid row, other refs by position.
    std::optional<std::vector<GridRef>> aligned(const std::vector<GridRef>& driving, const Expr& other) const {
        if (!is_reference(other)) return std::nullopt;
        if (other.kind == Expr::Kind::ColumnRef) {
            auto s = target_sheet(other);
            if (!s) return std::nullopt;
            std::vector<GridRef> out;
            out.reserve(driving.size());
            for (const auto& d : driving) out.push_back({*s, other.column, d.row});
            return out;
        }
        auto cells = range_cells(other);
        if (!cells || cells->size() != driving.size()) return std::nullopt;
        return cells;
    }

    Value read(const GridRef& g) const {
        const CellLocation loc = locate(wb_.sheets()[g.sheet], g.column, g.row);
        if (!loc.table) return Value::empty();
        if (!loc.row) return Value::text(loc.table->columns[loc.column].header);
        return loc.table->rows[*loc.row].cells[loc.column].cached;
    }

    Value eval(const Expr& e) const {
        switch (e.kind) {
            case Expr::Kind::Literal: return e.literal;
            case Expr::Kind::CriteriaLit: return Value::text(e.criteria.to_string());
            case Expr::Kind::CellRef: {
                auto s = target_sheet(e);
                if (!s) return Value::error(ErrorKind::Ref);
                return read({*s, e.start.column, e.start.row});
            }
            case Expr::Kind::RangeRef:
            case Expr::Kind::ColumnRef: {
                // Implicit intersection is not supported: a bare multi-cell range is a #VALUE!.
                auto cells = range_cells(e);
                if (!cells) return Value::error(ErrorKind::Ref);
                if (cells->size() == 1) return read(cells->front());
                return Value::error(ErrorKind::Value);
            }
            case Expr::Kind::Unary: {
                Value v = to_number(eval(*e.args[0]));
                if (v.is_error() || e.unary_op == UnaryOp::Plus) return v;
                return Value::number(-v.as_number());
            }
            case Expr::Kind::Binary: return binary(e);
            case Expr::Kind::Call: return call(e);
        }
        return Value::error(ErrorKind::Value);
    }

    static Value to_number(const Value& v) {
        switch (v.type()) {
            case Value::Type::Number: return v;
            case Value::Type::Empty: return Value::number(0);
            case Value::Type::Boolean: return Value::number(v.as_boolean() ? 1 : 0);
            case Value::Type::Error: return v;
            default: return Value::error(ErrorKind::Value);
        }
    }

    static int rank(const Value& v) {
        switch (v.type()) {
            case Value::Type::Number: return 0;
            case Value::Type::Date: return 1;
            case Value::Type::Text: return 2;
            case Value::Type::Boolean: return 3;
            default: return 0;
        }
    }

    static Value blank_like(const Value& other) {
        switch (other.type()) {
            case Value::Type::Text: return Value::text("");
            case Value::Type::Boolean: return Value::boolean(false);
            default: return Value::number(0);
        }
    }

    static std::partial_ordering compare(const Value& a, const Value& b) { return compare_values(a, b); }

    static std::partial_ordering compare_impl(Value a, Value b) {
        if (a.is_empty() && b.is_empty()) return std::partial_ordering::equivalent;
        if (a.is_empty()) {
            if (b.is_date()) return std::partial_ordering::less;
            a = blank_like(b);
        }
        if (b.is_empty()) {
            if (a.is_date()) return std::partial_ordering::greater;
            b = blank_like(a);
        }
        if (a.type() != b.type()) return rank(a) <=> rank(b);
        switch (a.type()) {
            case Value::Type::Number: return a.as_number() <=> b.as_number();
            case Value::Type::Date: return a.as_date() <=> b.as_date();
            case Value::Type::Text: return to_lower(a.as_text()) <=> to_lower(b.as_text());
            case Value::Type::Boolean: return a.as_boolean() <=> b.as_boolean();
            default: return std::partial_ordering::equivalent;
        }
    }

    Value binary(const Expr& e) const {
        const Value l = eval(*e.args[0]);
        const Value r = eval(*e.args[1]);
        if (l.is_error()) return l;
        if (r.is_error()) return r;
        switch (e.binary_op) {
            case BinaryOp::Concat: return Value::text(l.display() + r.display());
            case BinaryOp::Eq: case BinaryOp::Ne: case BinaryOp::Lt:
            case BinaryOp::Le: case BinaryOp::Gt: case BinaryOp::Ge: {
                const auto c = compare(l, r);
                switch (e.binary_op) {
                    case BinaryOp::Eq: return Value::boolean(c == 0);
                    case BinaryOp::Ne: return Value::boolean(c != 0);
                    case BinaryOp::Lt: return Value::boolean(c < 0);
                    case BinaryOp::Le: return Value::boolean(c <= 0);
                    case BinaryOp::Gt: return Value::boolean(c > 0);
                    default: return Value::boolean(c >= 0);
                }
            }
            default: break;
        }
        const Value a = to_number(l);
        const Value b = to_number(r);
        if (a.is_error()) return a;
        if (b.is_error()) return b;
        const double x = a.as_number(), y = b.as_number();
        switch (e.binary_op) {
            case BinaryOp::Add: return Value::number(x + y);
            case BinaryOp::Sub: return Value::number(x - y);
            case BinaryOp::Mul: return Value::number(x * y);
            case BinaryOp::Div:
                if (y == 0) return Value::error(ErrorKind::Div0);
                return Value::number(x / y);
            default: return Value::error(ErrorKind::Value);
        }
    }

    Criteria criteria_of(const Expr& arg, std::optional<Value>& error) const {
        if (arg.kind == Expr::Kind::CriteriaLit) return arg.criteria;
        const Value v = eval(arg);
        if (v.is_error()) {
            error = v;
            return {};
        }
        if (v.is_text()) return Criteria::parse(v.as_text());
        return Criteria::equal_to(v);
    }

    Value conditional(const Expr& e, CondKind kind) const {
        const CondLayout layout = layout_of(kind, e.args.size());
        const Expr& drive_expr = *e.args[layout.driving];
        if (!is_reference(drive_expr)) return Value::error(ErrorKind::Value);
        auto driving = range_cells(drive_expr);
        if (!driving) return Value::error(ErrorKind::Ref);

        std::vector<std::pair<std::vector<GridRef>, Criteria>> tests;
        for (const auto& [range_arg, crit_arg] : layout.pairs) {
            auto cells = aligned(*driving, *e.args[range_arg]);
            if (!cells) return Value::error(ErrorKind::Value);
            std::optional<Value> err;
            Criteria c = criteria_of(*e.args[crit_arg], err);
            if (err) return *err;
            tests.emplace_back(std::move(*cells), std::move(c));
        }
        std::vector<GridRef> summed;
        if (layout.sum) {
            auto cells = aligned(*driving, *e.args[*layout.sum]);
            if (!cells) return Value::error(ErrorKind::Value);
            summed = std::move(*cells);
        }

        double total = 0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < driving->size(); ++i) {
            const bool hit = std::all_of(tests.begin(), tests.end(),
                                         [&](const auto& t) { return t.second.matches(read(t.first[i])); });
            if (!hit) continue;
            ++count;
            if (layout.sum) {
                const Value v = read(summed[i]);
                if (v.is_error()) return v;
                if (v.is_number()) total += v.as_number();
            }
        }
        if (kind == CondKind::CountIf || kind == CondKind::CountIfs) return Value::number(static_cast<double>(count));
        return Value::number(total);
    }

    Value call(const Expr& e) const {
        if (!is_supported_function(e.name)) return Value::error(ErrorKind::Name);
        if (auto kind = cond_kind(e.name); kind != CondKind::None) return conditional(e, kind);
        if (e.name == "IF") {
            const Value cond = eval(*e.args[0]);
            bool truth = false;
            switch (cond.type()) {
                case Value::Type::Error: return cond;
                case Value::Type::Boolean: truth = cond.as_boolean(); break;
                case Value::Type::Number: truth = cond.as_number() != 0; break;
                case Value::Type::Empty: truth = false; break;
                default: return Value::error(ErrorKind::Value);
            }
            if (truth) return eval(*e.args[1]);
            if (e.args.size() == 3) return eval(*e.args[2]);
            return Value::boolean(false);
        }

        // SUM, AVERAGE, COUNT, MIN, MAX
        const bool is_count = e.name == "COUNT";
        std::vector<double> numbers;
        std::size_t counted = 0;
        for (const auto& arg : e.args) {
            if (is_reference(*arg)) {
                auto cells = range_cells(*arg);
                if (!cells) return Value::error(ErrorKind::Ref);
                for (const auto& g : *cells) {
                    const Value v = read(g);
                    if (v.is_error()) {
                        if (is_count) continue;
                        return v;
                    }
                    if (v.is_number()) numbers.push_back(v.as_number());
                    if (v.is_number() || v.is_date()) ++counted;
                }
                continue;
            }
            const Value v = eval(*arg);
            if (is_count) {
                if (v.is_number() || v.is_date()) ++counted;
                continue;
            }
            const Value n = to_number(v);
            if (n.is_error()) return n;
            numbers.push_back(n.as_number());
        }
        if (is_count) return Value::number(static_cast<double>(counted));
        if (e.name == "SUM") {
            double total = 0;
            for (double x : numbers) total += x;
            return Value::number(total);
        }
        if (e.name == "AVERAGE") {
            if (numbers.empty()) return Value::error(ErrorKind::Div0);
            double total = 0;
            for (double x : numbers) total += x;
            return Value::number(total / static_cast<double>(numbers.size()));
        }
        if (numbers.empty()) return Value::number(0);
        if (e.name == "MIN") return Value::number(*std::min_element(numbers.begin(), numbers.end()));
        return Value::number(*std::max_element(numbers.begin(), numbers.end()));
    }

    void reads(const Expr& e, std::vector<GridRef>& out) const {
        if (is_reference(e)) {
            if (auto cells = range_cells(e)) out.insert(out.end(), cells->begin(), cells->end());
            return;
        }
        if (e.kind == Expr::Kind::Call && is_supported_function(e.name)) {
            if (auto kind = cond_kind(e.name); kind != CondKind::None) {
                const CondLayout layout = layout_of(kind, e.args.size());
                std::vector<bool> is_range(e.args.size(), false);
                is_range[layout.driving] = true;
                for (const auto& p : layout.pairs) is_range[p.first] = true;
                if (layout.sum) is_range[*layout.sum] = true;
                const Expr& drive_expr = *e.args[layout.driving];
                std::optional<std::vector<GridRef>> driving;
                if (is_reference(drive_expr)) driving = range_cells(drive_expr);
                for (std::size_t i = 0; i < e.args.size(); ++i) {
                    if (!is_range[i]) {
                        reads(*e.args[i], out);
                        continue;
                    }
                    if (!driving) continue;
                    if (auto cells = aligned(*driving, *e.args[i])) out.insert(out.end(), cells->begin(), cells->end());
                }
                return;
            }
        }
        for (const auto& a : e.args) reads(*a, out);
    }

private:
    const Workbook& wb_;
    std::size_t sheet_;
};

}  // namespace

std::partial_ordering compare_values(const Value& a, const Value& b) { return Evaluator::compare_impl(a, b); }

Value evaluate(const Expr& ast, const Workbook& wb, std::size_t context_sheet) {
    if (context_sheet >= wb.sheets().size()) return Value::error(ErrorKind::Ref);
    return Evaluator(wb, context_sheet).eval(ast);
}

Value evaluate(const Expr& ast, const Workbook& wb, std::string_view context_sheet) {
    auto idx = wb.sheet_index(context_sheet);
    if (!idx) return Value::error(ErrorKind::Ref);
    return evaluate(ast, wb, *idx);
}

std::vector<CellAddress> resolve_column_ref(const Expr& column_ref, const Workbook& wb,
                                            std::string_view context_sheet) {
    std::vector<CellAddress> out;
    if (column_ref.kind != Expr::Kind::ColumnRef) return out;
    auto ctx = wb.sheet_index(context_sheet);
    if (!ctx) return out;
    Evaluator ev(wb, *ctx);
    auto s = ev.target_sheet(column_ref);
    if (!s) return out;
    for (const auto& g : ev.column_cells(*s, column_ref.column)) {
        out.push_back(CellAddress{g.column, g.row, column_ref.sheet});
    }
    return out;
}

std::vector<GridRef> collect_reads(const Expr& ast, const Workbook& wb, std::size_t context_sheet) {
    std::vector<GridRef> out;
    if (context_sheet >= wb.sheets().size()) return out;
    Evaluator(wb, context_sheet).reads(ast, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

RecalcStats recalculate(Workbook& wb) {
    struct Node {
        GridRef at;
        Cell* cell;
        std::vector<std::size_t> deps;
    };
    std::vector<Node> nodes;
    std::map<GridRef, std::size_t> index;
    for (std::size_t s = 0; s < wb.sheets().size(); ++s) {
        for (auto& t : wb.sheets()[s].tables) {
            for (std::size_t r = 0; r < t.rows.size(); ++r) {
                for (std::size_t c = 0; c < t.columns.size(); ++c) {
                    Cell& cell = t.rows[r].cells[c];
                    if (!cell.is_formula()) {
                        cell.cached = cell.literal_value();
                        continue;
                    }
                    const GridRef at{s, t.grid_column(c), t.grid_row(r)};
                    index[at] = nodes.size();
                    nodes.push_back(Node{at, &cell, {}});
                }
            }
        }
    }
    for (auto& n : nodes) {
        for (const auto& g : collect_reads(*n.cell->formula().ast, wb, n.at.sheet)) {
            if (auto it = index.find(g); it != index.end()) n.deps.push_back(it->second);
        }
    }

    // Tarjan's SCC, iterative. Components come out dependencies-first.
    const std::size_t n = nodes.size();
    constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> order(n, kUnvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> components;
    std::size_t counter = 0;
    for (std::size_t root = 0; root < n; ++root) {
        if (order[root] != kUnvisited) continue;
        std::vector<std::pair<std::size_t, std::size_t>> work{{root, 0}};
        while (!work.empty()) {
            auto& [v, next] = work.back();
            if (next == 0 && order[v] == kUnvisited) {
                order[v] = low[v] = counter++;
                stack.push_back(v);
                on_stack[v] = true;
            }
            if (next < nodes[v].deps.size()) {
                const std::size_t w = nodes[v].deps[next++];
                if (order[w] == kUnvisited) {
                    work.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], order[w]);
                }
                continue;
            }
            if (low[v] == order[v]) {
                auto& comp = components.emplace_back();
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != v);
            }
            const std::size_t done = v;
            work.pop_back();
            if (!work.empty()) {
                const std::size_t parent = work.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
        }
    }

    RecalcStats stats;
    for (const auto& comp : components) {
        const bool cyclic = comp.size() > 1 || std::find(nodes[comp[0]].deps.begin(), nodes[comp[0]].deps.end(),
                                                         comp[0]) != nodes[comp[0]].deps.end();
        if (cyclic) {
            for (std::size_t v : comp) nodes[v].cell->cached = Value::error(ErrorKind::Cycle);
            stats.cycle_cells += comp.size();
            continue;
        }
        Node& node = nodes[comp[0]];
        node.cell->cached = evaluate(*node.cell->formula().ast, wb, node.at.sheet);
        ++stats.evaluations;
    }
    refresh_roles(wb);
    return stats;
}

}  // namespace sheetagent
