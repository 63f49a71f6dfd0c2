#include "lexquad/analogy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "lexquad/io.hpp"

namespace lexquad {

std::string_view to_string(ScoreMethod method) {
    switch (method) {
        case ScoreMethod::QuadrupleOffset:
            return "offset";
        case ScoreMethod::PairConcat:
            return "pair";
        case ScoreMethod::External:
            return "external";
    }
    return "offset";
}

ScoreMethod parse_score_method(std::string_view token) {
    for (auto m : {ScoreMethod::QuadrupleOffset, ScoreMethod::PairConcat, ScoreMethod::External}) {
        if (token == to_string(m)) {
            return m;
        }
    }
    throw UsageError("unknown method '" + std::string(token) + "' (expected offset, pair or external)");
}

std::pair<double, double> score_range(ScoreMethod method) {
    return method == ScoreMethod::External ? std::pair{0.0, 1.0} : std::pair{-1.0, 1.0};
}

AnalogyScore score_quadruple_offset(const EmbeddingStore& store, const QuadRef& quad, FieldView case_view) {
    const auto g1 = offset(store.get(EmbeddingKey::statute(quad.first.statute_id)),
                           store.get(EmbeddingKey::case_view(quad.first.case_id, case_view)));
    const auto g2 = offset(store.get(EmbeddingKey::statute(quad.second.statute_id)),
                           store.get(EmbeddingKey::case_view(quad.second.case_id, case_view)));
    try {
        return {quad.quad_id(), ScoreMethod::QuadrupleOffset, cosine(g1, g2)};
    } catch (const DegenerateVectorError&) {
        throw DegenerateVectorError("quad '" + quad.quad_id() +
                                    "': zero offset (statute and case embeddings coincide)");
    }
}

AnalogyScore score_pair_concat(const EmbeddingStore& store, const QuadRef& quad) {
    const auto& a = store.get(EmbeddingKey::pair_concat(quad.first.statute_id, quad.first.case_id));
    const auto& b = store.get(EmbeddingKey::pair_concat(quad.second.statute_id, quad.second.case_id));
    try {
        return {quad.quad_id(), ScoreMethod::PairConcat, cosine(a, b)};
    } catch (const DegenerateVectorError&) {
        throw DegenerateVectorError("quad '" + quad.quad_id() + "': zero-norm concatenation embedding");
    }
}

double threshold_accuracy(std::span<const LabeledScore> scores, double threshold) {
    if (scores.empty()) {
        return 0.0;
    }
    std::size_t correct = 0;
    for (const auto& s : scores) {
        const auto pred = s.value > threshold ? AnalogyLabel::Analogy : AnalogyLabel::NotAnalogy;
        correct += pred == s.gold ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

ThresholdModel calibrate_threshold(std::span<const LabeledScore> scores, ScoreMethod method) {
    if (method == ScoreMethod::External) {
        throw UsageError("external predictions carry labels; there is no threshold to calibrate");
    }
    std::vector<LabeledScore> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
    const auto n = sorted.size();
    const auto positives = static_cast<std::size_t>(
        std::count_if(sorted.begin(), sorted.end(), [](const auto& s) { return s.gold == AnalogyLabel::Analogy; }));
    if (positives == 0 || positives == n) {
        throw DataError("calibration needs at least one score of each label");
    }
    const auto [lo, hi] = score_range(method);
    for (const auto& s : sorted) {
        if (!(s.value >= lo && s.value <= hi)) {
            throw DataError("score " + format_double(s.value) + " outside the method's range");
        }
    }

    // Threshold t with sorted[i-1] <= t < sorted[i] labels the first i scores
    // NotAnalogy. correct(i) = negatives among the first i + positives after.
    std::size_t best_correct = positives;  // i = 0: everything Analogy
    double best_threshold = sorted.front().value > lo ? lo + (sorted.front().value - lo) / 2 : lo;
    std::size_t neg_before = 0;
    std::size_t pos_before = 0;
    std::size_t i = 0;
    while (i < n) {
        const double v = sorted[i].value;
        while (i < n && sorted[i].value == v) {
            (sorted[i].gold == AnalogyLabel::Analogy ? pos_before : neg_before) += 1;
            ++i;
        }
        double t;
        if (i < n) {
            const double next = sorted[i].value;
            t = v + (next - v) / 2;
            if (!(t < next)) {
                t = v;
            }
        } else {
            t = v < hi ? v + (hi - v) / 2 : hi;
        }
        const std::size_t correct = neg_before + (positives - pos_before);
        if (correct > best_correct) {
            best_correct = correct;
            best_threshold = t;
        }
    }
    return {method, best_threshold, static_cast<double>(best_correct) / static_cast<double>(n), FieldView::CH};
}

void write_threshold_model(const ThresholdModel& model, std::ostream& out) {
    out << "format_version = 1\n"
        << "method = " << to_string(model.method) << '\n'
        << "case_view = " << to_string(model.case_view) << '\n'
        << "threshold = " << format_double(model.threshold) << '\n'
        << "dev_accuracy = " << format_double(model.dev_accuracy) << '\n';
}

ThresholdModel read_threshold_model(const std::filesystem::path& path) {
    const auto kv = read_key_values(path);
    if (require_int(kv, "format_version") != 1) {
        throw DataError(path.string() + ": unsupported threshold model version");
    }
    ThresholdModel m;
    m.method = parse_score_method(require_key(kv, "method"));
    m.case_view = kv.contains("case_view") ? parse_field_view(kv.at("case_view")) : FieldView::CH;
    m.threshold = require_double(kv, "threshold");
    m.dev_accuracy = require_double(kv, "dev_accuracy");
    const auto [lo, hi] = score_range(m.method);
    if (!(m.threshold >= lo && m.threshold <= hi)) {
        throw DataError(path.string() + ": threshold outside the method's score range");
    }
    return m;
}

std::optional<AnalogyLabel> ExternalPredictions::lookup(const QuadRef& quad) const {
    auto id = quad.quad_id();
    if (const auto it = labels_.find(id); it != labels_.end()) {
        return it->second;
    }
    if (const auto it = labels_.find(quad.swapped().quad_id()); it != labels_.end()) {
        return it->second;
    }
    throw MissingKeyError(id, "no external prediction for quad '" + id + "'");
}

namespace {

AnalogyLabel apply_threshold(double value, const ThresholdModel& model) {
    return value > model.threshold ? AnalogyLabel::Analogy : AnalogyLabel::NotAnalogy;
}

}  // namespace

std::optional<AnalogyLabel> classify_or_abstain(const AnalogyClassifier& classifier, const QuadRef& quad) {
    return std::visit(
        [&](const auto& c) -> std::optional<AnalogyLabel> {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, OffsetThreshold>) {
                return apply_threshold(score_quadruple_offset(*c.store, quad, c.model.case_view).value, c.model);
            } else if constexpr (std::is_same_v<T, PairThreshold>) {
                return apply_threshold(score_pair_concat(*c.store, quad).value, c.model);
            } else {
                return c.lookup(quad);
            }
        },
        classifier);
}

AnalogyLabel classify(const AnalogyClassifier& classifier, const QuadRef& quad) {
    if (auto label = classify_or_abstain(classifier, quad)) {
        return *label;
    }
    throw AbstentionError("classifier abstained on quad '" + quad.quad_id() + "'");
}

ExternalPredictions import_external_predictions(std::istream& in) {
    ExternalPredictions::Map labels;
    for_each_jsonl(in, [&](std::size_t line, const Json& rec) {
        const auto id = require_string(rec, "quad_id", line);
        try {
            parse_quad_id(id);
        } catch (const DataError& e) {
            throw ParseError(line, e.what());
        }
        const auto it = rec.find("label");
        if (it == rec.end()) {
            throw ParseError(line, "quad '" + id + "': missing label");
        }
        std::optional<AnalogyLabel> label;
        if (!it->is_null()) {
            const std::string token = it->is_string() ? it->get<std::string>() : it->dump();
            try {
                label = parse_analogy_label(token);
            } catch (const DataError&) {
                throw ParseError(line, "quad '" + id + "': unknown label '" + token + "'");
            }
        }
        if (!labels.emplace(id, label).second) {
            throw ParseError(line, "duplicate quad_id '" + id + "'");
        }
    });
    return ExternalPredictions(std::move(labels));
}

ExternalPredictions import_external_predictions(const std::filesystem::path& path) {
    auto in = open_input(path);
    return import_external_predictions(in);
}

void write_predictions(std::span<const PredictionRow> rows, std::ostream& out) {
    for (const auto& r : rows) {
        OrderedJson rec;
        rec["quad_id"] = r.quad_id;
        if (r.label) {
            rec["label"] = static_cast<int>(*r.label);
        } else {
            rec["label"] = nullptr;
        }
        out << rec.dump() << '\n';
    }
}

void write_scores(std::span<const AnalogyScore> scores, std::ostream& out) {
    for (const auto& s : scores) {
        OrderedJson rec;
        rec["quad_id"] = s.quad_id;
        rec["method"] = to_string(s.method);
        rec["value"] = s.value;
        out << rec.dump() << '\n';
    }
}

std::vector<AnalogyScore> read_scores(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<AnalogyScore> out;
    std::set<std::string> seen;
    for_each_jsonl(in, [&](std::size_t line, const Json& rec) {
        AnalogyScore s;
        s.quad_id = require_string(rec, "quad_id", line);
        try {
            s.method = parse_score_method(require_string(rec, "method", line));
        } catch (const UsageError& e) {
            throw ParseError(line, e.what());
        }
        const auto it = rec.find("value");
        if (it == rec.end() || !it->is_number()) {
            throw ParseError(line, "value must be a number");
        }
        s.value = it->get<double>();
        if (!seen.insert(s.quad_id).second) {
            throw ParseError(line, "duplicate quad_id '" + s.quad_id + "'");
        }
        out.push_back(std::move(s));
    });
    return out;
}

}  // namespace lexquad
