#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crisismine/util/error.hpp"

namespace cm::csv {

// Minimal RFC-4180-ish CSV: quoted fields with embedded commas/quotes,
// no embedded newlines.
inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

inline std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

// Reads all rows; `expect_header` is validated verbatim when non-empty.
inline std::vector<std::vector<std::string>> read_file(
    const std::string& path, const std::string& expect_header = "") {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first) {
            first = false;
            if (!expect_header.empty()) {
                if (line != expect_header)
                    throw DataError("unexpected CSV header in " + path +
                                    ": got '" + line + "', want '" +
                                    expect_header + "'");
                continue;
            }
        }
        if (line.empty()) continue;
        rows.push_back(split_line(line));
    }
    return rows;
}

}  // namespace cm::csv
