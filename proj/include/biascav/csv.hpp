#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace biascav {

/// Shortest decimal text that parses back to exactly `v`.
[[nodiscard]] std::string format_number(double v);
[[nodiscard]] double parse_number(std::string_view text);

/// Numeric table with `#`-prefixed comment lines and one header row.
struct CsvTable {
    std::vector<std::string> comments;  ///< without the leading "# "
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::size_t column(std::string_view name) const;
};

void write_csv(std::ostream& os, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
[[nodiscard]] CsvTable read_csv(std::istream& is);
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

}  // namespace biascav
