#include "fracpod/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fracpod/error.hpp"

namespace fracpod::csv {

std::string format(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<Row>& rows) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::Io, "cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << (i ? "," : "") << header[i];
    }
    if (!header.empty()) {
        out << '\n';
    }
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << format(row[i]);
        }
        out << '\n';
    }
    require(out.good(), ErrorKind::Io, "failed writing " + path.string());
}

namespace {

bool parse_row(const std::string& line, Row& row) {
    row.clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        if (first == std::string::npos) {
            return false;
        }
        const char* b = cell.data() + first;
        const char* e = cell.data() + last + 1;
        double v = 0.0;
        const auto res = std::from_chars(b, e, v);
        if (res.ec != std::errc() || res.ptr != e) {
            return false;
        }
        row.push_back(v);
    }
    return !row.empty();
}

}  // namespace

std::vector<Row> read(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Io, "cannot open " + path.string());
    std::vector<Row> rows;
    std::string line;
    bool first = true;
    Row row;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        if (parse_row(line, row)) {
            rows.push_back(row);
        } else if (!first) {
            fail(ErrorKind::Io, path.string() + ":" + std::to_string(lineno) + ": not numeric");
        }
        first = false;
    }
    return rows;
}

}  // namespace fracpod::csv
