#include "lexquad/embed_store.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <regex>

#include "lexquad/io.hpp"

namespace lexquad {

std::string_view to_string(FieldView view) {
    switch (view) {
        case FieldView::H:
            return "H";
        case FieldView::CH:
            return "CH";
        case FieldView::SCH:
            return "SCH";
    }
    return "H";
}

FieldView parse_field_view(std::string_view token) {
    std::string up(token);
    for (auto& ch : up) {
        ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    if (up == "H") {
        return FieldView::H;
    }
    if (up == "CH") {
        return FieldView::CH;
    }
    if (up == "SCH") {
        return FieldView::SCH;
    }
    throw UsageError("unknown field view '" + std::string(token) + "' (expected H, CH or SCH)");
}

std::string_view to_string(KeyScheme scheme) {
    switch (scheme) {
        case KeyScheme::Statute:
            return "statute";
        case KeyScheme::CaseH:
            return "case:h";
        case KeyScheme::CaseCH:
            return "case:ch";
        case KeyScheme::CaseSCH:
            return "case:sch";
        case KeyScheme::PairConcat:
            return "pair:concat";
    }
    return "statute";
}

KeyScheme case_scheme(FieldView view) {
    switch (view) {
        case FieldView::H:
            return KeyScheme::CaseH;
        case FieldView::CH:
            return KeyScheme::CaseCH;
        case FieldView::SCH:
            return KeyScheme::CaseSCH;
    }
    return KeyScheme::CaseCH;
}

EmbeddingKey EmbeddingKey::statute(std::string sid) { return {KeyScheme::Statute, std::move(sid), {}}; }

EmbeddingKey EmbeddingKey::case_view(std::string cid, FieldView view) {
    return {case_scheme(view), {}, std::move(cid)};
}

EmbeddingKey EmbeddingKey::pair_concat(std::string sid, std::string cid) {
    return {KeyScheme::PairConcat, std::move(sid), std::move(cid)};
}

EmbeddingKey EmbeddingKey::parse(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto colon = text.find(':', start);
        parts.push_back(text.substr(start, colon - start));
        if (colon == std::string_view::npos) {
            break;
        }
        start = colon + 1;
    }
    const bool ids_ok = std::all_of(parts.begin() + 1, parts.end(), [](auto p) { return !p.empty(); });
    if (ids_ok && parts.size() == 2 && parts[0] == "statute") {
        return statute(std::string(parts[1]));
    }
    if (ids_ok && parts.size() == 3 && parts[0] == "case") {
        if (parts[2] == "h") {
            return case_view(std::string(parts[1]), FieldView::H);
        }
        if (parts[2] == "ch") {
            return case_view(std::string(parts[1]), FieldView::CH);
        }
        if (parts[2] == "sch") {
            return case_view(std::string(parts[1]), FieldView::SCH);
        }
    }
    if (ids_ok && parts.size() == 4 && parts[0] == "pair" && parts[3] == "concat") {
        return pair_concat(std::string(parts[1]), std::string(parts[2]));
    }
    throw KeySchemeError("malformed embedding key '" + std::string(text) +
                         "' (expected statute:<sid>, case:<cid>:h|ch|sch or pair:<sid>:<cid>:concat)");
}

std::string EmbeddingKey::str() const {
    switch (scheme) {
        case KeyScheme::Statute:
            return "statute:" + statute_id;
        case KeyScheme::CaseH:
            return "case:" + case_id + ":h";
        case KeyScheme::CaseCH:
            return "case:" + case_id + ":ch";
        case KeyScheme::CaseSCH:
            return "case:" + case_id + ":sch";
        case KeyScheme::PairConcat:
            return "pair:" + statute_id + ":" + case_id + ":concat";
    }
    return {};
}

EmbeddingStore::EmbeddingStore(std::size_t dim, std::string encoder_name)
    : dim_(dim), encoder_name_(std::move(encoder_name)) {
    if (dim_ == 0) {
        throw DataError("embedding dimension must be positive");
    }
}

void EmbeddingStore::add(const EmbeddingKey& key, Vector v) {
    auto name = key.str();
    if (v.size() != dim_) {
        throw DataError("key '" + name + "': dimension mismatch (got " + std::to_string(v.size()) +
                        ", expected " + std::to_string(dim_) + ")");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw DataError("key '" + name + "': non-finite component at index " + std::to_string(i));
        }
    }
    if (entries_.contains(name)) {
        throw DataError("duplicate key '" + name + "'");
    }
    entries_.emplace(name, std::move(v));
    keys_.push_back(std::move(name));
}

bool EmbeddingStore::contains(const EmbeddingKey& key) const { return entries_.contains(key.str()); }

const Vector& EmbeddingStore::get(const EmbeddingKey& key) const {
    auto name = key.str();
    const auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw MissingKeyError(name, "missing embedding '" + name + "' (scheme " + std::string(to_string(key.scheme)) + ")");
    }
    return it->second;
}

const Vector& EmbeddingStore::get(std::string_view key) const { return get(EmbeddingKey::parse(key)); }

namespace {

// Best-effort key extraction for rows that are not valid JSON.
std::string sniff_key(const std::string& line) {
    static const std::regex key_re(R"re("key"\s*:\s*"([^"]*)")re");
    std::smatch m;
    return std::regex_search(line, m, key_re) ? m[1].str() : std::string("?");
}

bool has_non_finite_token(const std::string& line) {
    static const std::regex bad(R"(\b(nan|inf|infinity)\b)", std::regex::icase);
    return std::regex_search(line, bad);
}

}  // namespace

EmbeddingStore load_store(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    Json header;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        try {
            header = Json::parse(line);
        } catch (const Json::parse_error&) {
            throw ParseError(lineno, "malformed store header");
        }
        break;
    }
    if (!header.is_object()) {
        throw ParseError(lineno, "malformed store header: expected an object");
    }
    const auto version = header.find("format_version");
    const auto dim = header.find("dim");
    if (version == header.end() || !version->is_number_integer() || version->get<long long>() != 1) {
        throw ParseError(lineno, "malformed store header: format_version must be 1");
    }
    if (dim == header.end() || !dim->is_number_integer() || dim->get<long long>() <= 0) {
        throw ParseError(lineno, "malformed store header: dim must be a positive integer");
    }
    std::string encoder;
    if (const auto e = header.find("encoder_name"); e != header.end() && e->is_string()) {
        encoder = e->get<std::string>();
    }
    EmbeddingStore store(dim->get<std::size_t>(), encoder);

    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        Json rec;
        try {
            rec = Json::parse(line);
        } catch (const Json::parse_error&) {
            const auto key = sniff_key(line);
            if (has_non_finite_token(line)) {
                throw ParseError(lineno, "key '" + key + "': non-finite component");
            }
            throw ParseError(lineno, "key '" + key + "': malformed row");
        }
        if (!rec.is_object() || !rec.contains("key") || !rec["key"].is_string() || !rec.contains("vector") ||
            !rec["vector"].is_array()) {
            throw ParseError(lineno, "row must be {key: string, vector: array}");
        }
        const auto key_text = rec["key"].get<std::string>();
        Vector v;
        v.reserve(rec["vector"].size());
        for (const auto& x : rec["vector"]) {
            if (!x.is_number()) {
                throw ParseError(lineno, "key '" + key_text + "': non-numeric component");
            }
            v.push_back(x.get<double>());
        }
        try {
            store.add(EmbeddingKey::parse(key_text), std::move(v));
        } catch (const DataError& e) {
            throw ParseError(lineno, e.what());
        }
    }
    return store;
}

EmbeddingStore load_store(const std::filesystem::path& path) {
    auto in = open_input(path);
    return load_store(in);
}

void save_store(const EmbeddingStore& store, std::ostream& out) {
    OrderedJson header;
    header["format_version"] = 1;
    header["dim"] = store.dim();
    header["encoder_name"] = store.encoder_name();
    out << header.dump() << '\n';
    char buf[40];
    for (const auto& key : store.keys()) {
        out << "{\"key\":" << Json(key).dump() << ",\"vector\":[";
        const auto& v = store.get(key);
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.9g", v[i]);
            out << (i == 0 ? "" : ",") << buf;
        }
        out << "]}\n";
    }
}

std::vector<std::string> missing_keys(const EmbeddingStore& store, const Corpus& corpus,
                                      std::span<const KeyScheme> schemes) {
    std::vector<std::string> out;
    auto want = [&](const EmbeddingKey& k) {
        if (!store.contains(k)) {
            out.push_back(k.str());
        }
    };
    for (auto scheme : schemes) {
        if (scheme == KeyScheme::Statute) {
            for (const auto& s : corpus.statutes()) {
                want(EmbeddingKey::statute(s.id));
            }
            continue;
        }
        for (const auto& c : corpus.cases()) {
            if (scheme == KeyScheme::PairConcat) {
                want(EmbeddingKey::pair_concat(c.statute_id, c.id));
            } else {
                want(EmbeddingKey{scheme, {}, c.id});
            }
        }
    }
    return out;
}

namespace {

void check_dims(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw DataError("dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    }
}

}  // namespace

double dot(std::span<const double> u, std::span<const double> v) {
    check_dims(u, v);
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        acc += u[i] * v[i];
    }
    return acc;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector offset(std::span<const double> s, std::span<const double> c) {
    check_dims(s, c);
    Vector out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = s[i] - c[i];
    }
    return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    check_dims(u, v);
    const double nu = norm(u);
    const double nv = norm(v);
    if (nu == 0.0 || nv == 0.0) {
        throw DegenerateVectorError("cosine of a zero-norm vector");
    }
    return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

}  // namespace lexquad
