#include "starstab/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "starstab/errors.hpp"

namespace starstab::io {

namespace {
constexpr const char* kMagic = "# starstab-v1 ";
}

const std::vector<double>& Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return columns[i];
  throw ConfigError("table '" + kind + "' has no column '" + name + "'");
}

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_csv(const Table& t) {
  if (t.names.size() != t.columns.size()) throw Error("format_csv: names/columns size mismatch");
  for (const auto& c : t.columns)
    if (c.size() != t.rows()) throw Error("format_csv: ragged columns");
  std::string out = kMagic + t.kind + "\n";
  for (std::size_t j = 0; j < t.names.size(); ++j) out += (j ? "," : "") + t.names[j];
  out += "\n";
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      if (j) out += ',';
      out += fmt_double(t.columns[j][i]);
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const std::string& path, const Table& table) { write_text(path, format_csv(table)); }

Table read_csv(const std::string& path, const std::string& expected_kind) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind(kMagic, 0) != 0)
    throw ConfigError(path + ":1: missing '# starstab-v1' header");
  Table t;
  t.kind = line.substr(std::char_traits<char>::length(kMagic));
  if (t.kind != expected_kind)
    throw ConfigError(path + ":1: expected kind '" + expected_kind + "', found '" + t.kind + "'");
  if (!std::getline(in, line)) throw ConfigError(path + ":2: missing column header");
  {
    std::istringstream hs(line);
    std::string name;
    while (std::getline(hs, name, ',')) t.names.push_back(name);
  }
  t.columns.assign(t.names.size(), {});
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.c_str();
    for (std::size_t j = 0; j < t.names.size(); ++j) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p)
        throw ConfigError(path + ":" + std::to_string(lineno) + ": bad value in column '" + t.names[j] + "'");
      t.columns[j].push_back(v);
      p = end;
      if (j + 1 < t.names.size()) {
        if (*p != ',') throw ConfigError(path + ":" + std::to_string(lineno) + ": too few columns");
        ++p;
      }
    }
    if (*p != '\0') throw ConfigError(path + ":" + std::to_string(lineno) + ": too many columns");
  }
  return t;
}

}  // namespace starstab::io
