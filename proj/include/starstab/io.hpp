#pragma once

#include <string>
#include <vector>

namespace starstab::io {

/// Column-major numeric table as stored in versioned CSV files.
struct Table {
  std::string kind;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Writes `# starstab-v1 <kind>`, a header row and %.17g values, so a reload is
/// bit-exact.
void write_csv(const std::string& path, const Table& table);
std::string format_csv(const Table& table);

/// Parses a file written by write_csv; throws ConfigError on a kind mismatch
/// or malformed rows (with the offending line number).
Table read_csv(const std::string& path, const std::string& expected_kind);

/// Shortest round-trip representation of a double.
std::string fmt_double(double x);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace starstab::io
