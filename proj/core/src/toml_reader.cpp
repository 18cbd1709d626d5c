#include "toml_reader.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "glyco/errors.hpp"

namespace glyco::detail {

namespace {

using nlohmann::json;

class Parser {
public:
  explicit Parser(std::string_view text) : s_(text) {}

  json run() {
    json root = json::object();
    json* current = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        current = table_header(root);
      } else {
        key_value(*current);
      }
      end_of_line();
    }
    return root;
  }

private:
  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError("toml: " + what, line_); }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  char get() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  // Whitespace, newlines and comments.
  void skip_blank_lines() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        get();
      } else {
        break;
      }
    }
  }
  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') get();
    if (peek() != '\n') fail(std::string("unexpected character '") + peek() + "' after value");
    get();
  }

  static bool bare_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

  std::string simple_key() {
    skip_spaces();
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    const std::size_t start = pos_;
    while (!eof() && bare_key_char(peek())) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{simple_key()};
    skip_spaces();
    while (peek() == '.') {
      ++pos_;
      parts.push_back(simple_key());
      skip_spaces();
    }
    return parts;
  }

  json* descend(json& node, const std::string& key, bool create) {
    if (node.is_array()) {
      if (node.empty()) fail("cannot descend into an empty array");
      return descend(node.back(), key, create);
    }
    if (!node.contains(key)) {
      if (!create) fail("unknown table '" + key + "'");
      node[key] = json::object();
    }
    json& child = node[key];
    if (child.is_array() && !child.empty() && child.back().is_object()) return &child.back();
    if (!child.is_object()) fail("key '" + key + "' is not a table");
    return &child;
  }

  json* table_header(json& root) {
    get();
    const bool array_table = peek() == '[';
    if (array_table) get();
    const auto parts = dotted_key();
    json* node = &root;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = descend(*node, parts[i], true);
    const std::string& last = parts.back();
    if (array_table) {
      if (!node->contains(last)) (*node)[last] = json::array();
      json& arr = (*node)[last];
      if (!arr.is_array()) fail("key '" + last + "' is not an array of tables");
      arr.push_back(json::object());
      node = &arr.back();
    } else {
      if (node->contains(last) && (*node)[last].is_object() && !(*node)[last].empty())
        fail("table '" + last + "' defined twice");
      node = descend(*node, last, true);
    }
    skip_spaces();
    if (peek() != ']') fail("expected ']' closing table header");
    get();
    if (array_table) {
      if (peek() != ']') fail("expected ']]' closing array-of-tables header");
      get();
    }
    return node;
  }

  void key_value(json& table) {
    const auto parts = dotted_key();
    skip_spaces();
    if (peek() != '=') fail("expected '=' after key");
    get();
    skip_spaces();
    json value = parse_value();
    json* node = &table;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = descend(*node, parts[i], true);
    if (node->contains(parts.back())) fail("duplicate key '" + parts.back() + "'");
    (*node)[parts.back()] = std::move(value);
  }

  json parse_value() {
    if (eof()) fail("missing value");
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return number();
  }

  std::string basic_string() {
    get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        const char e = get();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape '\\") + e + "'");
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  std::string literal_string() {
    get();
    const std::size_t start = pos_;
    while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
    if (eof() || peek() != '\'') fail("unterminated literal string");
    std::string out(s_.substr(start, pos_ - start));
    ++pos_;
    return out;
  }

  json array() {
    get();
    json arr = json::array();
    while (true) {
      skip_blank_lines();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        get();
        break;
      }
      arr.push_back(parse_value());
      skip_blank_lines();
      if (peek() == ',') {
        get();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    return arr;
  }

  json inline_table() {
    get();
    json obj = json::object();
    skip_spaces();
    if (peek() == '}') {
      get();
      return obj;
    }
    while (true) {
      key_value(obj);
      skip_spaces();
      if (eof()) fail("unterminated inline table");
      const char c = get();
      if (c == '}') break;
      if (c != ',') fail("expected ',' or '}' in inline table");
      skip_spaces();
    }
    return obj;
  }

  json number() {
    const std::size_t start = pos_;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
        ++pos_;
      } else {
        break;
      }
    }
    std::string tok(s_.substr(start, pos_ - start));
    if (tok.empty()) fail("expected a value");
    std::string clean;
    for (char c : tok)
      if (c != '_') clean += c;

    if (clean == "inf" || clean == "+inf") return std::numeric_limits<double>::infinity();
    if (clean == "-inf") return -std::numeric_limits<double>::infinity();
    if (clean == "nan" || clean == "+nan" || clean == "-nan") return std::numeric_limits<double>::quiet_NaN();

    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    const char* b = clean.data();
    const char* e = clean.data() + clean.size();
    if (*b == '+') ++b;
    if (is_float) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || p != e) fail("invalid number '" + tok + "'");
      return v;
    }
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) fail("invalid value '" + tok + "'");
    return v;
  }
};

}  // namespace

nlohmann::json parse_toml(std::string_view text) { return Parser(text).run(); }

nlohmann::json read_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_toml(buf.str());
  } catch (const ParseError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace glyco::detail
