#include "ergo/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ergo/error.hpp"

namespace ergo::csv {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_number(double value) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw Error(ErrorKind::Format, "cannot format number");
    return std::string(buf.data(), end);
}

std::optional<double> parse_number(std::string_view cell) {
    cell = trim(cell);
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw Error(ErrorKind::Format, "malformed number '" + std::string(cell) + "'");
    }
    return value;
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.emplace_back(trim(line.substr(start)));
            break;
        }
        cells.emplace_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw Error(ErrorKind::Format, "missing column '" + std::string(name) + "'");
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());

    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
                line.erase(0, 3);
            }
            if (trim(line).empty()) {
                throw Error(ErrorKind::Format, path.string() + ": missing header line");
            }
            table.header = split_line(line);
            have_header = true;
            continue;
        }
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            std::ostringstream msg;
            msg << path.string() << ": row at line " << line_no << " has " << cells.size()
                << " cells, header has " << table.header.size();
            throw Error(ErrorKind::Format, msg.str());
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw Error(ErrorKind::Format, path.string() + ": missing header line");
    return table;
}

void write_table(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    auto write_row = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << cells[i];
        }
        out << '\n';
    };
    write_row(table.header);
    for (const auto& row : table.rows) write_row(row);
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::size_t NumericTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw Error(ErrorKind::Format, "missing column '" + std::string(name) + "'");
}

std::vector<double> NumericTable::series(std::string_view name) const {
    const auto c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[c]);
    return out;
}

NumericTable read_numeric(const std::filesystem::path& path) {
    const auto table = read_table(path);
    NumericTable out;
    out.header = table.header;
    out.rows.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::vector<double> values;
        values.reserve(out.header.size());
        for (const auto& cell : table.rows[r]) {
            auto v = parse_number(cell);
            if (!v) {
                throw Error(ErrorKind::Format, path.string() + ": empty cell at line " +
                                                   std::to_string(table.line_numbers[r]));
            }
            values.push_back(*v);
        }
        out.rows.push_back(std::move(values));
    }
    return out;
}

void write_numeric(const std::filesystem::path& path, const NumericTable& table) {
    Table text;
    text.header = table.header;
    text.rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        std::vector<std::string> cells;
        cells.reserve(row.size());
        for (double v : row) cells.push_back(format_number(v));
        text.rows.push_back(std::move(cells));
    }
    write_table(path, text);
}

}  // namespace ergo::csv
