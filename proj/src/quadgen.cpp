#include "lexquad/quadgen.hpp"

#include <algorithm>
#include <set>

#include "lexquad/errors.hpp"
#include "lexquad/io.hpp"

namespace lexquad {

std::string_view to_string(AnalogyLabel label) { return label == AnalogyLabel::Analogy ? "1" : "0"; }

AnalogyLabel flip(AnalogyLabel label) {
    return label == AnalogyLabel::Analogy ? AnalogyLabel::NotAnalogy : AnalogyLabel::Analogy;
}

AnalogyLabel label_quadruple(EntailmentLabel a, EntailmentLabel b) {
    return a == b ? AnalogyLabel::Analogy : AnalogyLabel::NotAnalogy;
}

AnalogyLabel parse_analogy_label(std::string_view token) {
    if (token == "1") {
        return AnalogyLabel::Analogy;
    }
    if (token == "0") {
        return AnalogyLabel::NotAnalogy;
    }
    throw DataError("unknown analogy label '" + std::string(token) + "' (expected 0 or 1)");
}

std::string QuadRef::quad_id() const { return first.key() + "::" + second.key(); }

QuadRef parse_quad_id(std::string_view quad_id) {
    auto split_pair = [&](std::string_view key) -> PairRef {
        const auto colon = key.find(':');
        if (colon == std::string_view::npos || colon == 0 || colon + 1 == key.size() ||
            key.find(':', colon + 1) != std::string_view::npos) {
            throw DataError("malformed quad id '" + std::string(quad_id) + "'");
        }
        return {std::string(key.substr(0, colon)), std::string(key.substr(colon + 1))};
    };
    const auto sep = quad_id.find("::");
    if (sep == std::string_view::npos) {
        throw DataError("malformed quad id '" + std::string(quad_id) + "'");
    }
    return {split_pair(quad_id.substr(0, sep)), split_pair(quad_id.substr(sep + 2))};
}

QuadDataset generate(const Corpus& corpus, Split split, QuadGenOptions opts) {
    auto pairs = corpus.pairs(split);
    if (pairs.empty()) {
        throw UsageError("split '" + std::string(to_string(split)) + "' is empty");
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<EntailmentLabel> gold;
    gold.reserve(pairs.size());
    for (const auto& p : pairs) {
        gold.push_back(corpus.get_case(p.case_id).gold);
    }

    QuadDataset ds{split, {}, opts};
    ds.quads.reserve(pairs.size() * (pairs.size() - 1) / 2);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        for (std::size_t j = i + 1; j < pairs.size(); ++j) {
            if (opts.exclude_same_statute && pairs[i].statute_id == pairs[j].statute_id) {
                continue;
            }
            Quadruple q;
            q.first = pairs[i];
            q.second = pairs[j];
            q.label = label_quadruple(gold[i], gold[j]);
            ds.quads.push_back(std::move(q));
        }
    }
    return ds;
}

QuadStats stats(const QuadDataset& ds) {
    QuadStats s;
    s.total = ds.quads.size();
    for (const auto& q : ds.quads) {
        if (q.label == AnalogyLabel::Analogy) {
            ++s.positives;
        } else {
            ++s.negatives;
        }
        if (q.first.statute_id == q.second.statute_id) {
            ++s.same_statute;
        }
    }
    return s;
}

namespace {

OrderedJson quad_record(const QuadRef& q) {
    OrderedJson rec;
    rec["quad_id"] = q.quad_id();
    rec["s1"] = q.first.statute_id;
    rec["c1"] = q.first.case_id;
    rec["s2"] = q.second.statute_id;
    rec["c2"] = q.second.case_id;
    return rec;
}

}  // namespace

void write_quads(const QuadDataset& ds, std::ostream& out) {
    for (const auto& q : ds.quads) {
        auto rec = quad_record(q);
        rec["label"] = static_cast<int>(q.label);
        out << rec.dump() << '\n';
    }
}

void write_quad_refs(const std::vector<QuadRef>& quads, std::ostream& out) {
    for (const auto& q : quads) {
        auto rec = quad_record(q);
        rec["label"] = nullptr;
        out << rec.dump() << '\n';
    }
}

void write_quads_expanded(const QuadDataset& ds, const Corpus& corpus, std::ostream& out) {
    for (const auto& q : ds.quads) {
        OrderedJson rec;
        rec["quad_id"] = q.quad_id();
        rec["statute_1"] = corpus.statute(q.first.statute_id).text;
        rec["case_1"] = case_text(corpus.get_case(q.first.case_id));
        rec["statute_2"] = corpus.statute(q.second.statute_id).text;
        rec["case_2"] = case_text(corpus.get_case(q.second.case_id));
        rec["label"] = static_cast<int>(q.label);
        out << rec.dump() << '\n';
    }
}

std::vector<QuadRecord> read_quad_records(std::istream& in) {
    std::vector<QuadRecord> out;
    std::set<std::string> seen;
    for_each_jsonl(in, [&](std::size_t line, const Json& rec) {
        QuadRecord r;
        r.quad.first = {require_string(rec, "s1", line), require_string(rec, "c1", line)};
        r.quad.second = {require_string(rec, "s2", line), require_string(rec, "c2", line)};
        const auto id = require_string(rec, "quad_id", line);
        if (id != r.quad.quad_id()) {
            throw ParseError(line, "quad_id '" + id + "' does not match its pair ids");
        }
        if (!seen.insert(id).second) {
            throw ParseError(line, "duplicate quad_id '" + id + "'");
        }
        if (const auto it = rec.find("label"); it != rec.end() && !it->is_null()) {
            if (!it->is_number_integer()) {
                throw ParseError(line, "label must be 0 or 1");
            }
            try {
                r.label = parse_analogy_label(std::to_string(it->get<long long>()));
            } catch (const DataError& e) {
                throw ParseError(line, e.what());
            }
        }
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<QuadRecord> read_quad_records(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_quad_records(in);
}

std::vector<Quadruple> read_quads(const std::filesystem::path& path) {
    std::vector<Quadruple> out;
    for (auto& r : read_quad_records(path)) {
        if (!r.label) {
            throw DataError(path.string() + ": quad '" + r.quad.quad_id() + "' has no label");
        }
        Quadruple q;
        static_cast<QuadRef&>(q) = std::move(r.quad);
        q.label = *r.label;
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace lexquad
