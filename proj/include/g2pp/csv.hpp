#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace g2pp::csv {

/// A parsed comma-separated table. Blank lines and lines starting with '#'
/// are skipped; fields are trimmed. `line_numbers[i]` is the 1-based source
/// line of `rows[i]`, used in error messages.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    /// Index of a header column, or -1 when absent.
    [[nodiscard]] int column(std::string_view name) const;
    [[nodiscard]] bool has(std::string_view name) const { return column(name) >= 0; }
};

Table read(std::istream& in, const std::string& source_name);
Table read_file(const std::string& path);

std::vector<std::string> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

/// Strict real parser; throws InputError naming `context` on failure.
double parse_real(std::string_view text, const std::string& context);
long long parse_int(std::string_view text, const std::string& context);

/// Shortest decimal representation that round-trips exactly.
std::string format(double value);

/// Reads a field of row `r` as a real, reporting source and line on failure.
double field(const Table& table, std::size_t r, int column, const std::string& source);

}  // namespace g2pp::csv
