#include "sheetagent/address.hpp"

#include <algorithm>
#include <cctype>

namespace sheetagent {

std::string column_letters(int column) {
    std::string out;
    while (column > 0) {
        const int rem = (column - 1) % 26;
        out.push_back(static_cast<char>('A' + rem));
        column = (column - 1) / 26;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::optional<int> column_index(std::string_view letters) {
    if (letters.empty() || letters.size() > 3) return std::nullopt;
    int value = 0;
    for (char c : letters) {
        const auto u = static_cast<unsigned char>(c);
        if (!std::isalpha(u)) return std::nullopt;
        value = value * 26 + (std::toupper(u) - 'A' + 1);
    }
    if (value > kMaxColumn) return std::nullopt;
    return value;
}

namespace {

bool is_plain_sheet_name(std::string_view name) {
    if (name.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(name.front())) && name.front() != '_') return false;
    if (!std::all_of(name.begin(), name.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; }))
        return false;
    // Names like "AB12" would read as a cell reference.
    std::size_t i = 0;
    while (i < name.size() && std::isalpha(static_cast<unsigned char>(name[i]))) ++i;
    if (i > 0 && i <= 3 && i < name.size() &&
        std::all_of(name.begin() + static_cast<std::ptrdiff_t>(i), name.end(),
                    [](unsigned char c) { return std::isdigit(c); }))
        return false;
    return true;
}

}  // namespace

std::string quote_sheet_name(std::string_view name) {
    if (is_plain_sheet_name(name)) return std::string(name);
    std::string out = "'";
    for (char c : name) {
        if (c == '\'') out += "''";
        else out.push_back(c);
    }
    out += "'";
    return out;
}

std::optional<CellAddress> CellAddress::parse(std::string_view text) {
    CellAddress addr;
    const auto bang = text.rfind('!');
    if (bang != std::string_view::npos) {
        std::string_view sheet = text.substr(0, bang);
        if (sheet.size() >= 2 && sheet.front() == '\'' && sheet.back() == '\'') {
            std::string name;
            for (std::size_t i = 1; i + 1 < sheet.size(); ++i) {
                name.push_back(sheet[i]);
                if (sheet[i] == '\'' && i + 2 < sheet.size() && sheet[i + 1] == '\'') ++i;
            }
            addr.sheet = name;
        } else {
            if (!is_plain_sheet_name(sheet)) return std::nullopt;
            addr.sheet = std::string(sheet);
        }
        if (addr.sheet->empty()) return std::nullopt;
        text = text.substr(bang + 1);
    }
    std::size_t i = 0;
    if (i < text.size() && text[i] == '$') ++i;
    const std::size_t col_start = i;
    while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
    auto col = column_index(text.substr(col_start, i - col_start));
    if (!col) return std::nullopt;
    if (i < text.size() && text[i] == '$') ++i;
    const std::size_t row_start = i;
    if (row_start >= text.size() || text[row_start] == '0') return std::nullopt;
    long row = 0;
    for (; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
        row = row * 10 + (text[i] - '0');
        if (row > kMaxRow) return std::nullopt;
    }
    addr.column = *col;
    addr.row = static_cast<int>(row);
    return addr;
}

std::string CellAddress::to_string() const {
    std::string out;
    if (sheet) out = quote_sheet_name(*sheet) + "!";
    out += column_letters(column);
    out += std::to_string(row);
    return out;
}

std::string Rect::to_string() const {
    return column_letters(left) + std::to_string(top) + ":" + column_letters(right) + std::to_string(bottom);
}

}  // namespace sheetagent
