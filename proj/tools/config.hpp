#pragma once

#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace starstab::cli {

// std::map-backed: references into the resolved document stay valid while
// sibling fields are added.
using Json = nlohmann::json;

/// Parses a config document; syntax errors become ConfigError with the
/// line/column reported by the parser.
Json parse_config(const std::string& text, const std::string& origin);

/// Typed, path-tracking view of one config object. Every read records the
/// value actually used (default or given) into `resolved`, so the emitted
/// config reproduces the run. finish() rejects fields that were never read.
class Section {
 public:
  Section(const Json& src, Json& resolved, std::string path);

  double number(const std::string& key, double def);
  int integer(const std::string& key, int def);
  bool flag(const std::string& key, bool def);
  std::string text(const std::string& key, const std::string& def);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& def);
  bool has(const std::string& key) const;
  Section sub(const std::string& key);
  /// Elements of an array of objects.
  std::vector<Section> list(const std::string& key);

  void finish();
  const std::string& path() const { return path_; }

 private:
  const Json* value(const std::string& key);
  std::string field(const std::string& key) const;

  const Json* src_;
  Json* out_;
  std::string path_;
  std::set<std::string> used_;
};

std::string sha256_hex(const std::string& bytes);

}  // namespace starstab::cli
