#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fcev::csv {

/// Numeric CSV: a header row followed by rows of doubles.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Column index by name; throws ParseError if absent.
    std::size_t column(const std::string& name) const;
};

/// Parses numeric CSV text. `expected_header`, when non-empty, must match exactly.
/// Errors carry 1-based row numbers (the header is row 1).
Table parse(const std::string& text, const std::vector<std::string>& expected_header = {});
Table read(const std::filesystem::path& path, const std::vector<std::string>& expected_header = {});

std::vector<std::string> split_line(const std::string& line);

/// `%.<digits>g` rendering; 17 digits round-trips any double.
std::string fmt(double v, int digits = 17);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace fcev::csv
