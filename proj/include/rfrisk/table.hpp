#pragma once

// Flat result tables and their CSV form: '.' decimal point, 17 significant
// digits, mandatory header, literal inf / -inf / nan tokens, RFC 4180 quoting.
// Text cells that would read back as numbers are always quoted, and quoted
// cells are always text, so a table survives a write / read cycle unchanged.

#include "rfrisk/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rfrisk {

using Field = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Field>> rows;

    void add_row(std::vector<Field> row) {
        detail::require(row.size() == columns.size(), ErrorCode::invalid_argument,
                        "row width does not match the header");
        rows.push_back(std::move(row));
    }

    [[nodiscard]] std::size_t column_index(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw Error(ErrorCode::invalid_argument, "no column named '" + std::string(name) + "'");
    }

    [[nodiscard]] double number(std::size_t row, std::string_view name) const {
        const Field& f = rows.at(row).at(column_index(name));
        detail::require(std::holds_alternative<double>(f), ErrorCode::invalid_argument,
                        "column '" + std::string(name) + "' is not numeric");
        return std::get<double>(f);
    }
};

[[nodiscard]] inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Numeric value of a cell, if the whole cell is a number or a non-finite token.
[[nodiscard]] inline bool parse_number(std::string_view s, double& out) {
    if (s == "inf") {
        out = HUGE_VAL;
        return true;
    }
    if (s == "-inf") {
        out = -HUGE_VAL;
        return true;
    }
    if (s == "nan") {
        out = std::nan("");
        return true;
    }
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

namespace detail {

inline std::string csv_escape(const std::string& s, bool force = false) {
    if (!force && s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string field_text(const Field& f) {
    if (const auto* d = std::get_if<double>(&f)) return format_number(*d);
    const auto& s = std::get<std::string>(f);
    double ignored;
    return csv_escape(s, s.empty() || parse_number(s, ignored));
}

struct Cell {
    std::string text;
    bool quoted = false;
};

// Splits one logical CSV record (which may span lines inside quotes).
inline bool read_record(std::istream& in, std::vector<Cell>& cells) {
    cells.clear();
    Cell cell;
    bool quoted = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    cell.text += '"';
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                cell.text += c;
            }
        } else if (c == '"') {
            quoted = true;
            cell.quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell = Cell{};
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            cell.text += c;
        }
    }
    if (!any) return false;
    cells.push_back(std::move(cell));
    return true;
}

}  // namespace detail

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << detail::csv_escape(t.columns[i]);
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << (i ? "," : "") << detail::field_text(row[i]);
        }
        os << '\n';
    }
}

/// Unquoted cells that parse as numbers come back as double, everything else as text.
[[nodiscard]] inline Table read_csv(std::istream& is) {
    Table t;
    std::vector<detail::Cell> cells;
    detail::require(detail::read_record(is, cells), ErrorCode::invalid_argument, "CSV input has no header");
    for (auto& c : cells) t.columns.push_back(std::move(c.text));
    while (detail::read_record(is, cells)) {
        if (cells.size() == 1 && cells[0].text.empty() && !cells[0].quoted) continue;
        std::vector<Field> row;
        row.reserve(cells.size());
        for (auto& c : cells) {
            double v;
            if (!c.quoted && parse_number(c.text, v)) {
                row.emplace_back(v);
            } else {
                row.emplace_back(std::move(c.text));
            }
        }
        t.add_row(std::move(row));
    }
    return t;
}

/// Field-wise equality that treats nan as equal to nan.
[[nodiscard]] inline bool same_field(const Field& a, const Field& b) {
    if (a.index() != b.index()) return false;
    if (const auto* x = std::get_if<double>(&a)) {
        const double y = std::get<double>(b);
        return (std::isnan(*x) && std::isnan(y)) || *x == y;
    }
    return std::get<std::string>(a) == std::get<std::string>(b);
}

}  // namespace rfrisk
