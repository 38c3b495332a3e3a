#include "sheetagent/value.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace sheetagent {

bool is_valid_date(int year, int month, int day) {
    if (year < 1 || year > 9999 || month < 1 || month > 12 || day < 1) return false;
    static constexpr std::array<int, 12> kDays{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    const int limit = (month == 2 && leap) ? 29 : kDays[month - 1];
    return day <= limit;
}

std::optional<Date> Date::make(int year, int month, int day) {
    if (!is_valid_date(year, month, day)) return std::nullopt;
    return Date{year, month, day};
}

std::optional<Date> Date::parse_iso(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    auto y = field(0, 4), m = field(5, 2), d = field(8, 2);
    if (!y || !m || !d) return std::nullopt;
    return make(*y, *m, *d);
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::string_view error_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Div0: return "#DIV/0!";
        case ErrorKind::Ref: return "#REF!";
        case ErrorKind::Value: return "#VALUE!";
        case ErrorKind::Name: return "#NAME?";
        case ErrorKind::Cycle: return "#CYCLE!";
    }
    return "#VALUE!";
}

Value Value::number(double x) {
    if (!std::isfinite(x)) return error(ErrorKind::Value);
    if (x == 0.0) x = 0.0;  // drop negative zero
    return Value{Storage{x}};
}

std::string format_number(double x) {
    if (x == 0.0) return "0";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), end);
}

std::optional<double> parse_number(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::string_view body = text;
    if (body.front() == '+') body.remove_prefix(1);
    if (body.empty() || body.front() == '+' ) return std::nullopt;
    // from_chars accepts "inf"/"nan"; spreadsheet literals do not.
    const char lead = body.front() == '-' && body.size() > 1 ? body[1] : body.front();
    if (!std::isdigit(static_cast<unsigned char>(lead)) && lead != '.') return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc{} || ptr != body.data() + body.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string Value::display() const {
    switch (type()) {
        case Type::Empty: return "";
        case Type::Number: return format_number(as_number());
        case Type::Text: return as_text();
        case Type::Boolean: return as_boolean() ? "TRUE" : "FALSE";
        case Type::Date: return as_date().iso();
        case Type::Error: return std::string(error_code(as_error()));
    }
    return "";
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace sheetagent
