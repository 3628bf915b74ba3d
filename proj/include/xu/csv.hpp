#pragma once

#include <cstddef>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "xu/errors.hpp"

namespace xu {

/// Rows with the wrong field count are reported here and skipped.
struct CsvWarning {
    std::size_t line;
    std::string message;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<CsvWarning> warnings;

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw Error(ExitCode::io_error, "csv: missing required column '" + name + "'");
    }
};

namespace detail {

// One logical record; quoted fields may span newlines and use "" escapes.
// Returns false at end of input.
inline bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line,
                        std::size_t& lines_consumed) {
    fields.clear();
    lines_consumed = 1;
    int first = in.peek();
    if (first == std::char_traits<char>::eof()) return false;

    std::string field;
    bool in_quotes = false;
    bool any = false;
    for (int ci = in.get(); ci != std::char_traits<char>::eof(); ci = in.get()) {
        char c = static_cast<char>(ci);
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++lines_consumed;
                field += c;
            }
        } else if (c == '"') {
            if (field.empty()) {
                in_quotes = true;
            } else {
                field += c;
            }
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c == '\r') {
            if (in.peek() == '\n') {
                in.get();
                break;
            }
            field += c;
        } else {
            field += c;
        }
    }
    if (in_quotes) {
        throw Error(ExitCode::parse_error,
                    "csv: unterminated quoted field starting near line " + std::to_string(line));
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

}  // namespace detail

/// Header row is required. Short or long data rows are skipped with a
/// warning rather than aborting the load.
inline CsvTable read_csv(std::istream& in, const std::string& what) {
    CsvTable table;
    std::vector<std::string> fields;
    std::size_t line = 1;
    std::size_t consumed = 0;
    if (!detail::read_record(in, fields, line, consumed)) {
        throw Error(ExitCode::parse_error, "csv: " + what + " is empty");
    }
    table.header = fields;
    line += consumed;
    while (detail::read_record(in, fields, line, consumed)) {
        if (fields.size() != table.header.size()) {
            table.warnings.push_back(
                {line, "csv: line " + std::to_string(line) + ": expected " +
                           std::to_string(table.header.size()) + " fields, got " +
                           std::to_string(fields.size()) + "; row skipped"});
        } else {
            table.rows.push_back(fields);
        }
        line += consumed;
    }
    return table;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ExitCode::io_error, "cannot open csv file: " + path);
    }
    return read_csv(in, path);
}

/// Quotes a field iff it contains a comma, quote, or newline.
inline std::string csv_escape(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out << ',';
        out << csv_escape(fields[i]);
    }
    out << '\n';
}

}  // namespace xu
