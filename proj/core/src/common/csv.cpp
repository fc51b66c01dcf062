#include "fcev/common/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fcev/common/error.hpp"

namespace fcev::csv {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return errno == 0 && end == s.c_str() + s.size();
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ParseError("missing column '" + name + "'", 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

Table parse(const std::string& text, const std::vector<std::string>& expected_header) {
    Table t;
    std::istringstream is(text);
    std::string line;
    std::size_t row = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (!have_header) {
            double probe = 0;
            if (parse_double(cells.front(), probe)) throw ParseError("missing header row", row);
            if (!expected_header.empty() && cells != expected_header) {
                std::string want;
                for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
                throw ParseError("unexpected header, expected '" + want + "'", row);
            }
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " +
                                 std::to_string(cells.size()) + " at row " + std::to_string(row),
                             row);
        }
        std::vector<double> values(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!parse_double(cells[i], values[i])) {
                throw ParseError("non-numeric field '" + cells[i] + "' at row " + std::to_string(row), row);
            }
        }
        t.rows.push_back(std::move(values));
    }
    if (!have_header) throw ParseError("empty file", 0);
    return t;
}

Table read(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
    try {
        return parse(read_text(path), expected_header);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.row());
    }
}

std::string fmt(double v, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace fcev::csv
