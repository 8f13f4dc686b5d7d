#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace acmet::csv {

// Comma-separated, '.' decimal point, UTF-8, Unix line endings. Fields may be
// double-quoted; embedded quotes are doubled.

struct Table {
    std::vector<std::string> comments;  // leading '#' lines, without newline
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> row_lines;  // 1-based source line of each row, for error messages
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string join_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            out += '"';
            for (char c : f) {
                if (c == '"') out += '"';
                out += c;
            }
            out += '"';
        } else {
            out += f;
        }
    }
    return out;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Table t;
    std::string line;
    bool have_header = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(line);
            continue;
        }
        if (!have_header) {
            t.header = split_line(line);
            have_header = true;
        } else {
            t.rows.push_back(split_line(line));
            t.row_lines.push_back(line_no);
        }
    }
    if (!have_header) throw std::runtime_error(path + ": empty CSV file");
    return t;
}

inline std::string to_string(const Table& t) {
    std::string out;
    for (const auto& c : t.comments) out += c + "\n";
    out += join_line(t.header) + "\n";
    for (const auto& r : t.rows) out += join_line(r) + "\n";
    return out;
}

inline void write_file(const std::string& path, const Table& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_string(t);
}

inline double parse_num(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(context + ": bad numeric field '" + s + "'");
    }
}

}  // namespace acmet::csv
