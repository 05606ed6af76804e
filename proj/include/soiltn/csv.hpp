#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace soiltn {

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double x);

// Strict full-token parses; throw ParseError with `context` on failure.
double parse_double(std::string_view token, const std::string& context);
std::int64_t parse_int(std::string_view token, const std::string& context);

std::vector<std::string> split_csv_line(std::string_view line, char sep = ',');

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name; throws ParseError if absent.
    std::size_t column(const std::string& name) const;
};

// Reads a whole CSV file. First line is the header. Blank trailing lines
// are ignored; every data row must have the header's column count.
CsvTable read_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace soiltn
