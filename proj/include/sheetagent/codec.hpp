#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sheetagent/json.hpp"
#include "sheetagent/workbook.hpp"

namespace sheetagent {

inline constexpr std::string_view kStateSchemaVersion = "state/v1";

/// Canonical state/v1 document. Equal content gives equal bytes; the revision is not included.
std::string serialize_state(const Workbook& wb);
Json state_json(const Workbook& wb);

class StateFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structural check of a state/v1 document; returns the first problem found.
std::optional<std::string> validate_state(const Json& doc);

/// Rebuilds a workbook from a state/v1 document and recalculates it. Throws StateFormatError.
Workbook deserialize_state(const Json& doc);
Workbook parse_state(std::string_view text);

/// A table drafted in chat. Cells are single-line text; "=" starts a formula.
struct TableProto {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    bool operator==(const TableProto&) const = default;
};

bool is_formula_source(std::string_view cell);

class NoTableFound : public std::runtime_error {
public:
    NoTableFound() : std::runtime_error("no Markdown pipe table found") {}
};

class RaggedRow : public std::runtime_error {
public:
    RaggedRow(std::size_t line, std::size_t got, std::size_t expected)
        : std::runtime_error("row on line " + std::to_string(line) + " has " + std::to_string(got) +
                             " cells, expected " + std::to_string(expected)),
          line_(line) {}
    /// 1-based line in the parsed text.
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Pipe table with a "### name" heading when the proto is named.
std::string render_markdown(const TableProto& proto);

/// First pipe table in `text`. The name comes from a heading or bold line directly above it.
/// Later tables are ignored; a note is appended to `warnings` when given.
TableProto parse_markdown(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Formula sources for formula cells, display text for literals.
TableProto table_proto(const Table& table);

/// RFC 4180, CRLF line ends, cached values of visible rows, header first.
std::string export_csv(const Table& table);

}  // namespace sheetagent
