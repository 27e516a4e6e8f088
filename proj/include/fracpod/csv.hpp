#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fracpod::csv {

/// Shortest round-trip decimal form, identical on every run.
std::string format(double v);

using Row = std::vector<double>;

/// Writes an optional header line followed by numeric rows.
void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<Row>& rows);

/// Reads numeric rows; a first line that does not parse as numbers is
/// treated as a header and skipped.
std::vector<Row> read(const std::filesystem::path& path);

}  // namespace fracpod::csv
