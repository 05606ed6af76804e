#include "soiltn/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "soiltn/errors.hpp"

namespace soiltn {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        double back = std::strtod(buf, nullptr);
        if (back == x) break;
    }
    return buf;
}

double parse_double(std::string_view token, const std::string& context) {
    // from_chars(double) rejects leading '+' and surrounding spaces, which is
    // the strictness we want for data files.
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || token.empty()) {
        throw ParseError("expected a number at " + context + ", got '" +
                         std::string(token) + "'");
    }
    return value;
}

std::int64_t parse_int(std::string_view token, const std::string& context) {
    std::int64_t value = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || token.empty()) {
        throw ParseError("expected an integer at " + context + ", got '" +
                         std::string(token) + "'");
    }
    return value;
}

std::vector<std::string> split_csv_line(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ParseError("missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
        } else {
            if (cells.size() != table.header.size()) {
                throw ParseError(path + ":" + std::to_string(lineno) +
                                 ": expected " + std::to_string(table.header.size()) +
                                 " columns, got " + std::to_string(cells.size()));
            }
            table.rows.push_back(std::move(cells));
        }
    }
    if (table.header.empty()) throw ParseError(path + ": empty file");
    return table;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
    if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace soiltn
