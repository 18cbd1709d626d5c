#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

namespace glyco::detail {

/// Reads the subset of TOML used by our config files: comments, [tables],
/// [[arrays of tables]], bare/quoted keys, strings, integers, floats
/// (including inf/nan), booleans, arrays (may span lines) and inline tables.
/// Throws ParseError with the offending line.
nlohmann::json parse_toml(std::string_view text);

/// Throws ConfigError if the file cannot be opened.
nlohmann::json read_toml_file(const std::filesystem::path& path);

}  // namespace glyco::detail
