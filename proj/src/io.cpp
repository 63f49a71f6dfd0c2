#include "lexquad/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <istream>

#include "lexquad/errors.hpp"

namespace lexquad {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

void for_each_jsonl(std::istream& in, const std::function<void(std::size_t, const Json&)>& fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        Json rec;
        try {
            rec = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ParseError(lineno, std::string("malformed record: ") + e.what());
        }
        if (!rec.is_object()) {
            throw ParseError(lineno, "record is not a JSON object");
        }
        fn(lineno, rec);
    }
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

std::string require_string(const Json& rec, std::string_view field, std::size_t line) {
    const auto it = rec.find(field);
    if (it == rec.end()) {
        throw ParseError(line, "missing field '" + std::string(field) + "'");
    }
    if (!it->is_string()) {
        throw ParseError(line, "field '" + std::string(field) + "' must be a string");
    }
    return it->get<std::string>();
}

std::string optional_string(const Json& rec, std::string_view field, std::size_t line) {
    const auto it = rec.find(field);
    if (it == rec.end() || it->is_null()) {
        return {};
    }
    if (!it->is_string()) {
        throw ParseError(line, "field '" + std::string(field) + "' must be a string");
    }
    return it->get<std::string>();
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

KeyValues read_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(lineno, "expected 'key = value'");
        }
        std::string key(trim(t.substr(0, eq)));
        if (key.empty()) {
            throw ParseError(lineno, "empty key");
        }
        if (!kv.emplace(key, std::string(trim(t.substr(eq + 1)))).second) {
            throw ParseError(lineno, "duplicate key '" + key + "'");
        }
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_key_values(in);
}

const std::string& require_key(const KeyValues& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        throw DataError("missing key '" + key + "'");
    }
    return it->second;
}

double require_double(const KeyValues& kv, const std::string& key) {
    const auto& s = require_key(kv, key);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw DataError("key '" + key + "': not a number: '" + s + "'");
    }
    return v;
}

long long require_int(const KeyValues& kv, const std::string& key) {
    const auto& s = require_key(kv, key);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DataError("key '" + key + "': not an integer: '" + s + "'");
    }
    return v;
}

}  // namespace lexquad
