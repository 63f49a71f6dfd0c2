#include "lexquad/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lexquad/errors.hpp"
#include "lexquad/io.hpp"
#include "lexquad/sampling.hpp"

namespace lexquad {

std::string_view to_string(EntailmentLabel label) {
    return label == EntailmentLabel::Entailment ? "entailment" : "contradiction";
}

EntailmentLabel parse_entailment_label(std::string_view token) {
    if (token == "entailment") {
        return EntailmentLabel::Entailment;
    }
    if (token == "contradiction") {
        return EntailmentLabel::Contradiction;
    }
    throw DataError("unknown label '" + std::string(token) + "'");
}

EntailmentLabel opposite(EntailmentLabel label) {
    return label == EntailmentLabel::Entailment ? EntailmentLabel::Contradiction
                                                : EntailmentLabel::Entailment;
}

std::string_view to_string(Split split) {
    switch (split) {
        case Split::Train:
            return "train";
        case Split::Dev:
            return "dev";
        case Split::Test:
            return "test";
    }
    return "train";
}

Split parse_split(std::string_view token) {
    for (auto s : kAllSplits) {
        if (token == to_string(s)) {
            return s;
        }
    }
    throw UsageError("unknown split '" + std::string(token) + "' (expected train, dev or test)");
}

std::string case_text(const Case& c) {
    if (c.context.empty()) {
        return c.hypothesis;
    }
    return c.context + " " + c.hypothesis;
}

std::string PairRef::key() const { return statute_id + ":" + case_id; }

Corpus::Corpus(std::vector<Statute> statutes, std::vector<Case> cases, SplitLists splits)
    : statutes_(std::move(statutes)), cases_(std::move(cases)), splits_(std::move(splits)) {
    for (std::size_t i = 0; i < statutes_.size(); ++i) {
        statute_index_.emplace(statutes_[i].id, i);
    }
    for (std::size_t i = 0; i < cases_.size(); ++i) {
        case_index_.emplace(cases_[i].id, i);
    }
}

const Statute* Corpus::find_statute(std::string_view id) const {
    const auto it = statute_index_.find(std::string(id));
    return it == statute_index_.end() ? nullptr : &statutes_[it->second];
}

const Case* Corpus::find_case(std::string_view id) const {
    const auto it = case_index_.find(std::string(id));
    return it == case_index_.end() ? nullptr : &cases_[it->second];
}

const Statute& Corpus::statute(std::string_view id) const {
    if (const auto* s = find_statute(id)) {
        return *s;
    }
    throw DataError("unknown statute id '" + std::string(id) + "'");
}

const Case& Corpus::get_case(std::string_view id) const {
    if (const auto* c = find_case(id)) {
        return *c;
    }
    throw DataError("unknown case id '" + std::string(id) + "'");
}

std::vector<PairRef> Corpus::pairs(Split s) const {
    std::vector<PairRef> out;
    out.reserve(split(s).size());
    for (const auto& id : split(s)) {
        out.push_back(pair_of(get_case(id)));
    }
    return out;
}

bool Corpus::operator==(const Corpus& other) const {
    if (statutes_ != other.statutes_ || splits_ != other.splits_ || cases_.size() != other.cases_.size()) {
        return false;
    }
    return std::all_of(cases_.begin(), cases_.end(), [&](const Case& c) {
        const auto* o = other.find_case(c.id);
        return o != nullptr && *o == c;
    });
}

std::vector<Violation> validate(const Corpus& corpus) {
    std::vector<Violation> out;
    auto check_id = [&](const std::string& id, const char* what) {
        if (id.empty()) {
            out.push_back({id, std::string(what) + " id is empty"});
        } else if (id.find(':') != std::string::npos) {
            out.push_back({id, std::string(what) + " id contains reserved character ':'"});
        }
    };

    std::set<std::string> seen;
    for (const auto& s : corpus.statutes()) {
        check_id(s.id, "statute");
        if (!seen.insert(s.id).second) {
            out.push_back({s.id, "duplicate statute id"});
        }
        if (trim(s.text).empty()) {
            out.push_back({s.id, "statute text is empty"});
        }
    }
    seen.clear();
    for (const auto& c : corpus.cases()) {
        check_id(c.id, "case");
        if (!seen.insert(c.id).second) {
            out.push_back({c.id, "duplicate case id"});
        }
        if (corpus.find_statute(c.statute_id) == nullptr) {
            out.push_back({c.id, "statute_id '" + c.statute_id + "' does not resolve"});
        }
        if (trim(c.hypothesis).empty()) {
            out.push_back({c.id, "hypothesis is empty"});
        }
    }

    std::map<std::string, Split> owner;
    for (auto s : kAllSplits) {
        std::set<std::string> in_split;
        for (const auto& id : corpus.split(s)) {
            if (corpus.find_case(id) == nullptr) {
                out.push_back({id, "split '" + std::string(to_string(s)) + "' references unknown case"});
            }
            if (!in_split.insert(id).second) {
                out.push_back({id, "listed twice in split '" + std::string(to_string(s)) + "'"});
                continue;
            }
            const auto [it, fresh] = owner.emplace(id, s);
            if (!fresh) {
                out.push_back({id, "in both '" + std::string(to_string(it->second)) + "' and '" +
                                       std::string(to_string(s)) + "' splits"});
            }
        }
    }
    return out;
}

namespace {

const std::set<std::string, std::less<>> kStatuteFields{"kind", "id", "section_label", "text"};
const std::set<std::string, std::less<>> kCaseFields{"kind",       "id",   "statute_id", "context",
                                                     "hypothesis", "gold", "split"};

void reject_unknown_fields(const Json& rec, const std::set<std::string, std::less<>>& allowed,
                           std::size_t line) {
    for (const auto& [k, v] : rec.items()) {
        if (!allowed.contains(k)) {
            throw ParseError(line, "unknown field '" + k + "'");
        }
    }
}

std::string describe(const std::vector<Violation>& vs) {
    std::string msg = "corpus failed validation:";
    for (const auto& v : vs) {
        msg += "\n  " + v.record_id + ": " + v.rule;
    }
    return msg;
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
    std::vector<Statute> statutes;
    std::vector<Case> cases;
    SplitLists splits;
    std::set<std::string> statute_ids;
    std::set<std::string> case_ids;

    for_each_jsonl(in, [&](std::size_t line, const Json& rec) {
        const auto kind = require_string(rec, "kind", line);
        const auto id = require_string(rec, "id", line);
        if (kind == "statute") {
            reject_unknown_fields(rec, kStatuteFields, line);
            if (!cases.empty()) {
                throw ParseError(line, "statute '" + id + "' appears after case records");
            }
            if (!statute_ids.insert(id).second) {
                throw ParseError(line, "duplicate statute id '" + id + "'");
            }
            statutes.push_back({id, optional_string(rec, "section_label", line),
                                optional_string(rec, "text", line)});
        } else if (kind == "case") {
            reject_unknown_fields(rec, kCaseFields, line);
            if (!case_ids.insert(id).second) {
                throw ParseError(line, "duplicate case id '" + id + "'");
            }
            if (const auto it = rec.find("statute_id"); it != rec.end() && it->is_array()) {
                throw ParseError(line, "case '" + id + "' links several statutes; exactly one is allowed");
            }
            Case c;
            c.id = id;
            c.statute_id = require_string(rec, "statute_id", line);
            if (!statute_ids.contains(c.statute_id)) {
                throw ParseError(line, "case '" + id + "': dangling statute_id '" + c.statute_id + "'");
            }
            c.context = optional_string(rec, "context", line);
            c.hypothesis = optional_string(rec, "hypothesis", line);
            const auto gold = require_string(rec, "gold", line);
            try {
                c.gold = parse_entailment_label(gold);
            } catch (const DataError&) {
                throw ParseError(line, "case '" + id + "': unknown label '" + gold + "'");
            }
            const auto split = optional_string(rec, "split", line);
            if (!split.empty()) {
                try {
                    splits[static_cast<std::size_t>(parse_split(split))].push_back(id);
                } catch (const UsageError&) {
                    throw ParseError(line, "case '" + id + "': unknown split '" + split + "'");
                }
            }
            cases.push_back(std::move(c));
        } else {
            throw ParseError(line, "unknown record kind '" + kind + "'");
        }
    });

    Corpus corpus(std::move(statutes), std::move(cases), std::move(splits));
    if (auto violations = validate(corpus); !violations.empty()) {
        throw DataError(describe(violations));
    }
    return corpus;
}

Corpus parse_corpus(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_corpus(in);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
    for (const auto& s : corpus.statutes()) {
        OrderedJson rec;
        rec["kind"] = "statute";
        rec["id"] = s.id;
        rec["section_label"] = s.section_label;
        rec["text"] = s.text;
        out << rec.dump() << '\n';
    }
    auto emit_case = [&](const Case& c, const Split* split) {
        OrderedJson rec;
        rec["kind"] = "case";
        rec["id"] = c.id;
        rec["statute_id"] = c.statute_id;
        rec["context"] = c.context;
        rec["hypothesis"] = c.hypothesis;
        rec["gold"] = to_string(c.gold);
        if (split != nullptr) {
            rec["split"] = to_string(*split);
        }
        out << rec.dump() << '\n';
    };
    std::set<std::string> written;
    for (auto s : kAllSplits) {
        for (const auto& id : corpus.split(s)) {
            emit_case(corpus.get_case(id), &s);
            written.insert(id);
        }
    }
    for (const auto& c : corpus.cases()) {
        if (!written.contains(c.id)) {
            emit_case(c, nullptr);
        }
    }
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_corpus(corpus, out);
}

Corpus resplit_test_to_dev(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    const auto& test = corpus.split(Split::Test);
    if (n > test.size()) {
        throw UsageError("cannot move " + std::to_string(n) + " cases: test split has only " +
                         std::to_string(test.size()));
    }
    const auto picked = sample_without_replacement(test.size(), n, seed);
    std::vector<bool> moved(test.size(), false);
    SplitLists splits = corpus.splits();
    auto& dev = splits[static_cast<std::size_t>(Split::Dev)];
    for (auto i : picked) {
        moved[i] = true;
        dev.push_back(test[i]);
    }
    auto& new_test = splits[static_cast<std::size_t>(Split::Test)];
    new_test.clear();
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (!moved[i]) {
            new_test.push_back(test[i]);
        }
    }
    return Corpus(corpus.statutes(), corpus.cases(), std::move(splits));
}

std::pair<std::string, std::string> split_context_hypothesis(std::string_view text) {
    const auto t = trim(text);
    if (t.empty()) {
        return {};
    }
    // Last terminator followed by whitespace, excluding the text's own final
    // character.
    std::size_t boundary = std::string_view::npos;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const char ch = t[i];
        if ((ch == '.' || ch == '?' || ch == '!') && std::isspace(static_cast<unsigned char>(t[i + 1]))) {
            boundary = i;
        }
    }
    if (boundary == std::string_view::npos) {
        return {std::string(), std::string(t)};
    }
    return {std::string(trim(t.substr(0, boundary + 1))), std::string(trim(t.substr(boundary + 1)))};
}

namespace {

std::string read_file(const std::filesystem::path& p) {
    auto in = open_input(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string lower(std::string s) {
    for (auto& ch : s) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    return s;
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    bool space = false;
    for (char ch : trim(s)) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) {
            out.push_back(' ');
        }
        space = false;
        out.push_back(ch);
    }
    return out;
}

struct SaraCase {
    std::string text;
    std::string question;
    std::string answer;
};

// Parses the commented header of a SARA case file:
//   % Text
//   % ...
//   % Question
//   % ... Entailment
// An optional "% Answer" section carries the label instead of the question tail.
SaraCase parse_sara_case(const std::string& content) {
    SaraCase out;
    std::string* target = nullptr;
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.front() != '%') {
            target = nullptr;
            continue;
        }
        t = trim(t.substr(std::min(t.find_first_not_of('%'), t.size())));
        const auto head = lower(std::string(t));
        if (head == "text") {
            target = &out.text;
        } else if (head == "question") {
            target = &out.question;
        } else if (head == "answer") {
            target = &out.answer;
        } else if (target != nullptr && !t.empty()) {
            *target += ' ';
            *target += t;
        }
    }
    out.text = collapse_ws(out.text);
    out.question = collapse_ws(out.question);
    out.answer = collapse_ws(out.answer);
    return out;
}

std::optional<EntailmentLabel> label_token(std::string_view token) {
    auto t = lower(std::string(trim(token)));
    while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.back()))) {
        t.pop_back();
    }
    if (t == "entailment") {
        return EntailmentLabel::Entailment;
    }
    if (t == "contradiction") {
        return EntailmentLabel::Contradiction;
    }
    return std::nullopt;
}

// "s151_b_pos" -> "s151_b"; "s2_a_1_A_neg" -> "s2_a_1_A".
std::string statute_key_of(const std::string& case_name) {
    const auto us = case_name.rfind('_');
    if (us == std::string::npos) {
        return case_name;
    }
    const auto tail = case_name.substr(us + 1);
    const bool strip = tail == "pos" || tail == "neg" ||
                       std::all_of(tail.begin(), tail.end(), [](unsigned char ch) { return std::isdigit(ch); });
    return strip ? case_name.substr(0, us) : case_name;
}

// "s151_b" -> "151(b)"; "s2_a_1_A" -> "2(a)(1)(A)".
std::string section_label_of(const std::string& key) {
    std::vector<std::string> parts;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '_')) {
        parts.push_back(part);
    }
    if (parts.empty()) {
        return key;
    }
    std::string label = parts[0];
    if (!label.empty() && (label[0] == 's' || label[0] == 'S')) {
        label.erase(0, 1);
    }
    for (std::size_t i = 1; i < parts.size(); ++i) {
        label += "(" + parts[i] + ")";
    }
    return label;
}

std::string statute_text_for(const std::filesystem::path& root, const std::string& key) {
    namespace fs = std::filesystem;
    for (const auto& candidate : {root / "statutes" / key, root / "statutes" / (key + ".txt")}) {
        if (fs::is_regular_file(candidate)) {
            return collapse_ws(read_file(candidate));
        }
    }
    throw DataError("no statute text for '" + key + "' under " + (root / "statutes").string());
}

}  // namespace

Corpus convert_sara(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    const auto cases_dir = root / "cases";
    if (!fs::is_directory(cases_dir)) {
        throw DataError("missing cases directory: " + cases_dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cases_dir)) {
        if (entry.is_regular_file()) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<Statute> statutes;
    std::set<std::string> statute_ids;
    std::vector<Case> cases;
    for (const auto& file : files) {
        const auto name = file.stem().string();
        const auto parsed = parse_sara_case(read_file(file));
        std::string question = parsed.question;
        std::optional<EntailmentLabel> label;
        if (!parsed.answer.empty()) {
            label = label_token(parsed.answer);
        } else if (const auto sp = question.rfind(' '); sp != std::string::npos) {
            label = label_token(question.substr(sp + 1));
            if (label) {
                question = std::string(trim(question.substr(0, sp)));
            }
        }
        if (!label) {
            continue;  // numerical-answer case
        }
        auto full = parsed.text.empty() ? question : parsed.text + " " + question;
        auto [context, hypothesis] = split_context_hypothesis(full);

        const auto key = statute_key_of(name);
        if (statute_ids.insert(key).second) {
            statutes.push_back({key, section_label_of(key), statute_text_for(root, key)});
        }
        cases.push_back({name, key, std::move(context), std::move(hypothesis), *label});
    }

    std::set<std::string> known;
    for (const auto& c : cases) {
        known.insert(c.id);
    }
    SplitLists splits;
    for (auto s : kAllSplits) {
        const auto list = root / "splits" / std::string(to_string(s));
        if (!fs::is_regular_file(list)) {
            continue;
        }
        auto in = open_input(list);
        std::string line;
        while (std::getline(in, line)) {
            auto id = fs::path(std::string(trim(line))).stem().string();
            if (!id.empty() && known.contains(id)) {
                splits[static_cast<std::size_t>(s)].push_back(id);
            }
        }
    }

    Corpus corpus(std::move(statutes), std::move(cases), std::move(splits));
    if (auto violations = validate(corpus); !violations.empty()) {
        throw DataError(describe(violations));
    }
    return corpus;
}

}  // namespace lexquad
