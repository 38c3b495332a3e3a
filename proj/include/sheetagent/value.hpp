#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace sheetagent {

/// Proleptic Gregorian calendar date. Always valid once constructed through
/// `Date::make` or `Date::parse_iso`.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    static std::optional<Date> make(int year, int month, int day);
    /// Accepts exactly `YYYY-MM-DD`.
    static std::optional<Date> parse_iso(std::string_view text);

    std::string iso() const;

    auto operator<=>(const Date&) const = default;
};

bool is_valid_date(int year, int month, int day);

enum class ErrorKind { Div0, Ref, Value, Name, Cycle };

std::string_view error_code(ErrorKind kind);

struct Empty {
    bool operator==(const Empty&) const = default;
};

struct ErrorValue {
    ErrorKind kind;
    bool operator==(const ErrorValue&) const = default;
};

/// Result of evaluating a cell: Number, Text, Boolean, Date, Empty or Error.
class Value {
public:
    enum class Type { Empty, Number, Text, Boolean, Date, Error };

    Value() = default;

    static Value empty() { return Value{}; }
    static Value number(double x);
    static Value text(std::string s) { return Value{Storage{std::move(s)}}; }
    static Value boolean(bool b) { return Value{Storage{b}}; }
    static Value date(Date d) { return Value{Storage{d}}; }
    static Value error(ErrorKind k) { return Value{Storage{ErrorValue{k}}}; }

    Type type() const { return static_cast<Type>(data_.index()); }
    bool is_empty() const { return type() == Type::Empty; }
    bool is_number() const { return type() == Type::Number; }
    bool is_text() const { return type() == Type::Text; }
    bool is_boolean() const { return type() == Type::Boolean; }
    bool is_date() const { return type() == Type::Date; }
    bool is_error() const { return type() == Type::Error; }

    double as_number() const { return std::get<double>(data_); }
    const std::string& as_text() const { return std::get<std::string>(data_); }
    bool as_boolean() const { return std::get<bool>(data_); }
    Date as_date() const { return std::get<Date>(data_); }
    ErrorKind as_error() const { return std::get<ErrorValue>(data_).kind; }

    /// Text shown in a grid cell and written to state documents.
    std::string display() const;

    bool operator==(const Value&) const = default;

private:
    using Storage = std::variant<Empty, double, std::string, bool, Date, ErrorValue>;
    explicit Value(Storage s) : data_(std::move(s)) {}
    Storage data_;
};

/// Shortest decimal text that parses back to exactly `x`.
std::string format_number(double x);

/// Parses a complete decimal literal (no surrounding whitespace).
std::optional<double> parse_number(std::string_view text);

std::string to_upper(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s);

}  // namespace sheetagent
