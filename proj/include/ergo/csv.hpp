#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ergo::csv {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Parses a full cell as a double; empty or whitespace-only cells are absent.
/// Throws a format error on malformed text.
std::optional<double> parse_number(std::string_view cell);

std::vector<std::string> split_line(std::string_view line);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based source line number of each row, for error messages.
    std::vector<std::size_t> line_numbers;

    /// Index of `name` in the header or throws a format error.
    std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a header line. Ragged rows are
/// rejected with the offending line number.
Table read_table(const std::filesystem::path& path);

/// Writes the table verbatim (no quoting; cells never contain commas).
void write_table(const std::filesystem::path& path, const Table& table);

/// Reads a numeric table where every cell must be present.
struct NumericTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const;
    std::vector<double> series(std::string_view name) const;
};

NumericTable read_numeric(const std::filesystem::path& path);
void write_numeric(const std::filesystem::path& path, const NumericTable& table);

}  // namespace ergo::csv
