#pragma once

// Line-delimited JSON and flat key-value file helpers.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"

namespace lexquad {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Calls `fn(line_number, record)` for each non-blank line. Lines that are
/// not JSON objects raise ParseError with the 1-based line number.
void for_each_jsonl(std::istream& in, const std::function<void(std::size_t, const Json&)>& fn);

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

/// Typed field access that raises ParseError naming the field.
std::string require_string(const Json& rec, std::string_view field, std::size_t line);
std::string optional_string(const Json& rec, std::string_view field, std::size_t line);

/// `%.17g`; parses back to the identical double.
std::string format_double(double v);

/// Flat "key = value" text. Blank lines and lines starting with '#' are
/// ignored. Duplicate keys are a ParseError.
using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);
const std::string& require_key(const KeyValues& kv, const std::string& key);
double require_double(const KeyValues& kv, const std::string& key);
long long require_int(const KeyValues& kv, const std::string& key);

std::string_view trim(std::string_view s);

}  // namespace lexquad
