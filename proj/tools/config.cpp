#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include <openssl/evp.h>

#include "starstab/errors.hpp"

namespace starstab::cli {

Json parse_config(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

Section::Section(const Json& src, Json& resolved, std::string path)
    : src_(&src), out_(&resolved), path_(std::move(path)) {
  if (!src_->is_object()) throw ConfigError("config field '" + (path_.empty() ? "<root>" : path_) + "': expected an object");
  if (!out_->is_object()) *out_ = Json::object();
}

std::string Section::field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool Section::has(const std::string& key) const { return src_->contains(key); }

const Json* Section::value(const std::string& key) {
  used_.insert(key);
  auto it = src_->find(key);
  return it == src_->end() ? nullptr : &*it;
}

double Section::number(const std::string& key, double def) {
  double x = def;
  if (const auto* v = value(key)) {
    if (!v->is_number()) throw ConfigError("config field '" + field(key) + "': expected a number");
    x = v->get<double>();
  }
  if (!std::isfinite(x)) throw ConfigError("config field '" + field(key) + "': must be finite");
  (*out_)[key] = x;
  return x;
}

int Section::integer(const std::string& key, int def) {
  int x = def;
  if (const auto* v = value(key)) {
    if (!v->is_number_integer()) throw ConfigError("config field '" + field(key) + "': expected an integer");
    x = v->get<int>();
  }
  (*out_)[key] = x;
  return x;
}

bool Section::flag(const std::string& key, bool def) {
  bool x = def;
  if (const auto* v = value(key)) {
    if (!v->is_boolean()) throw ConfigError("config field '" + field(key) + "': expected true or false");
    x = v->get<bool>();
  }
  (*out_)[key] = x;
  return x;
}

std::string Section::text(const std::string& key, const std::string& def) {
  std::string x = def;
  if (const auto* v = value(key)) {
    if (!v->is_string()) throw ConfigError("config field '" + field(key) + "': expected a string");
    x = v->get<std::string>();
  }
  (*out_)[key] = x;
  return x;
}

std::vector<double> Section::numbers(const std::string& key, const std::vector<double>& def) {
  std::vector<double> x = def;
  if (const auto* v = value(key)) {
    if (!v->is_array()) throw ConfigError("config field '" + field(key) + "': expected an array of numbers");
    x.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number())
        throw ConfigError("config field '" + field(key) + "[" + std::to_string(i) + "]': expected a number");
      x.push_back((*v)[i].get<double>());
    }
  }
  (*out_)[key] = x;
  return x;
}

Section Section::sub(const std::string& key) {
  static const Json empty = Json::object();
  const auto* v = value(key);
  return Section(v ? *v : empty, (*out_)[key], field(key));
}

std::vector<Section> Section::list(const std::string& key) {
  std::vector<Section> out;
  const auto* v = value(key);
  if (!v) return out;
  if (!v->is_array()) throw ConfigError("config field '" + field(key) + "': expected an array of objects");
  auto& arr = (*out_)[key] = Json::array();
  for (std::size_t i = 0; i < v->size(); ++i) arr.push_back(Json::object());
  for (std::size_t i = 0; i < v->size(); ++i)
    out.emplace_back((*v)[i], arr[i], field(key) + "[" + std::to_string(i) + "]");
  return out;
}

void Section::finish() {
  for (auto it = src_->begin(); it != src_->end(); ++it)
    if (!used_.count(it.key())) throw ConfigError("config field '" + field(it.key()) + "': unknown field");
}

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw NumericalFailure("sha256: OpenSSL digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace starstab::cli
