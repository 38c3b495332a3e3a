#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace sheetagent {

inline constexpr int kMaxColumn = 16384;    // XFD
inline constexpr int kMaxRow = 1048576;

/// Renders a 1-based column index as letters: 1 -> A, 27 -> AA.
std::string column_letters(int column);

/// Inverse of `column_letters`; nullopt for empty/invalid input or out of range.
std::optional<int> column_index(std::string_view letters);

/// A1-style cell address, optionally qualified by a sheet name.
struct CellAddress {
    int column = 1;
    int row = 1;
    std::optional<std::string> sheet;

    /// Parses `B7`, `Sheet1!B7` or `'My Sheet'!B7`. `$` markers are accepted and dropped.
    static std::optional<CellAddress> parse(std::string_view text);

    std::string to_string() const;

    bool operator==(const CellAddress&) const = default;
};

/// Inclusive rectangle of grid cells.
struct Rect {
    int left = 1;
    int top = 1;
    int right = 1;
    int bottom = 1;

    bool intersects(const Rect& o) const {
        return left <= o.right && o.left <= right && top <= o.bottom && o.top <= bottom;
    }
    bool contains(int column, int row) const {
        return column >= left && column <= right && row >= top && row <= bottom;
    }
    Rect inflated(int by) const { return {left - by, top - by, right + by, bottom + by}; }

    /// `A1:D7`
    std::string to_string() const;

    bool operator==(const Rect&) const = default;
};

/// Quotes a sheet name for use in a reference when it is not a plain identifier.
std::string quote_sheet_name(std::string_view name);

}  // namespace sheetagent
