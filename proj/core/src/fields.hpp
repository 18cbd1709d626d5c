#pragma once

#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "glyco/errors.hpp"
#include "glyco/msg_model.hpp"

namespace glyco::detail {

/// Reads typed fields from a JSON object and rejects keys nobody asked for.
class Fields {
public:
  Fields(const nlohmann::json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) fail("expected a table");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const nlohmann::json& raw(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) fail("missing key '" + key + "'");
    return obj_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    return v.get<double>();
  }
  void number(const std::string& key, double& out) {
    if (has(key)) out = number(key);
  }

  long integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<long>();
  }
  template <class T>
  void integer(const std::string& key, T& out) {
    if (has(key)) out = static_cast<T>(integer(key));
  }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }
  void string(const std::string& key, std::string& out) {
    if (has(key)) out = string(key);
  }

  bool boolean(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_boolean()) fail("'" + key + "' must be true or false");
    return v.get<bool>();
  }
  void boolean(const std::string& key, bool& out) {
    if (has(key)) out = boolean(key);
  }

  Bounds bounds(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      fail("'" + key + "' must be a two-number array [lo, hi]");
    return {v[0].get<double>(), v[1].get<double>()};
  }
  void bounds(const std::string& key, Bounds& out) {
    if (has(key)) out = bounds(key);
  }

  Fields table(const std::string& key) { return Fields(raw(key), where_ + "." + key); }

  /// Throws if the object holds keys that were never read.
  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(where_ + ": " + what); }

  const std::string& where() const { return where_; }

private:
  const nlohmann::json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace glyco::detail
