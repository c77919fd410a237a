#include "biascav/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "biascav/error.hpp"

namespace biascav {

std::string format_number(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (res.ec != std::errc{}) throw Error("cannot format number");
    return {buf.data(), res.ptr};
}

double parse_number(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ValidationError("not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ValidationError("CSV has no column '" + std::string(name) + "'");
}

void write_csv(std::ostream& os, const CsvTable& table) {
    for (const auto& c : table.comments) os << "# " << c << '\n';
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) os << ',';
        os << table.header[i];
    }
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << format_number(row[i]);
        }
        os << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    write_csv(os, table);
    os.flush();
    if (!os) throw IoError("failed writing '" + path.string() + "'");
}

CsvTable read_csv(std::istream& is) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::string_view c(line);
            c.remove_prefix(1);
            if (!c.empty() && c.front() == ' ') c.remove_prefix(1);
            table.comments.emplace_back(c);
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ValidationError("CSV line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.header.size()) + " columns, got " +
                                  std::to_string(cells.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                row.push_back(parse_number(c));
            } catch (const ValidationError& e) {
                throw ValidationError("CSV line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw ValidationError("CSV has no header row");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
    return read_csv(is);
}

}  // namespace biascav
