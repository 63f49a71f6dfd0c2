#include "lexquad/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "lexquad/errors.hpp"
#include "lexquad/sampling.hpp"

namespace lexquad {

namespace {

int index_of(EntailmentLabel l) { return l == EntailmentLabel::Entailment ? 0 : 1; }
int index_of(AnalogyLabel l) { return l == AnalogyLabel::NotAnalogy ? 0 : 1; }

const std::array<std::string, 2> kEntailmentNames{"entailment", "contradiction"};
const std::array<std::string, 2> kAnalogyNames{"0", "1"};

template <class Label>
EvalReport tally(std::span<const Label> predicted, std::span<const Label> gold,
                 const std::array<std::string, 2>& names) {
    if (gold.empty()) {
        throw UsageError("accuracy of an empty prediction set");
    }
    if (predicted.size() != gold.size()) {
        throw UsageError("prediction and gold counts differ");
    }
    EvalReport r;
    r.labels = names;
    r.n = gold.size();
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const int g = index_of(gold[i]);
        const int p = index_of(predicted[i]);
        ++r.confusion[g][p];
        r.correct += g == p ? 1 : 0;
    }
    r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.n);
    return r;
}

template <class Label>
EvalReport baseline(std::span<const Label> gold, const std::array<std::string, 2>& names, Label first,
                    Label second) {
    if (gold.empty()) {
        throw UsageError("majority baseline of an empty label set");
    }
    const auto n_first = std::count(gold.begin(), gold.end(), first);
    const auto n_second = static_cast<std::ptrdiff_t>(gold.size()) - n_first;
    const Label majority = n_first >= n_second ? first : second;
    const std::vector<Label> predicted(gold.size(), majority);
    return tally<Label>(predicted, gold, names);
}

}  // namespace

EvalReport accuracy(std::span<const EntailmentLabel> predicted, std::span<const EntailmentLabel> gold) {
    return tally(predicted, gold, kEntailmentNames);
}

EvalReport accuracy(std::span<const AnalogyLabel> predicted, std::span<const AnalogyLabel> gold) {
    return tally(predicted, gold, kAnalogyNames);
}

EvalReport majority_baseline(std::span<const EntailmentLabel> gold) {
    return baseline(gold, kEntailmentNames, EntailmentLabel::Entailment, EntailmentLabel::Contradiction);
}

EvalReport majority_baseline(std::span<const AnalogyLabel> gold) {
    return baseline(gold, kAnalogyNames, AnalogyLabel::NotAnalogy, AnalogyLabel::Analogy);
}

SampledEvalReport sampled_accuracy(const std::vector<bool>& correct, std::size_t m, std::size_t size,
                                   std::uint64_t seed) {
    if (m == 0 || size == 0) {
        throw UsageError("sampled evaluation needs at least one set of at least one item");
    }
    if (size > correct.size()) {
        throw UsageError("set size " + std::to_string(size) + " exceeds the " + std::to_string(correct.size()) +
                         " available predictions");
    }
    SampledEvalReport r{m, size, seed, {}, 0.0, 0.0};
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t hits = 0;
        for (auto idx : sample_without_replacement(correct.size(), size, seed + i)) {
            hits += correct[idx] ? 1 : 0;
        }
        r.per_set.push_back(static_cast<double>(hits) / static_cast<double>(size));
    }
    double sum = 0.0;
    for (double a : r.per_set) {
        sum += a;
    }
    r.mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (double a : r.per_set) {
        ss += (a - r.mean) * (a - r.mean);
    }
    r.std_dev = std::sqrt(ss / static_cast<double>(m));
    return r;
}

void write_report_header(std::ostream& out) { out << "format_version = 1\n"; }

void write_report(const EvalReport& r, std::ostream& out, const std::string& prefix) {
    out << prefix << "labels = " << r.labels[0] << ',' << r.labels[1] << '\n'
        << prefix << "n = " << r.n << '\n'
        << prefix << "correct = " << r.correct << '\n'
        << prefix << "accuracy = " << format_double(r.accuracy) << '\n';
    for (int g = 0; g < 2; ++g) {
        for (int p = 0; p < 2; ++p) {
            out << prefix << "confusion." << r.labels[g] << '.' << r.labels[p] << " = " << r.confusion[g][p]
                << '\n';
        }
    }
}

void write_report(const SampledEvalReport& r, std::ostream& out, const std::string& prefix) {
    out << prefix << "generator = " << kSamplerName << '\n'
        << prefix << "seed_derivation = seed+i\n"
        << prefix << "std_kind = population\n"
        << prefix << "sets = " << r.sets << '\n'
        << prefix << "set_size = " << r.set_size << '\n'
        << prefix << "seed = " << r.seed << '\n'
        << prefix << "per_set = ";
    for (std::size_t i = 0; i < r.per_set.size(); ++i) {
        out << (i == 0 ? "" : ",") << format_double(r.per_set[i]);
    }
    out << '\n'
        << prefix << "mean = " << format_double(r.mean) << '\n'
        << prefix << "std = " << format_double(r.std_dev) << '\n';
}

void check_report_version(const KeyValues& kv) {
    if (!kv.contains("format_version") || require_int(kv, "format_version") != 1) {
        throw DataError("report: missing or unsupported format_version");
    }
}

EvalReport read_eval_report(const KeyValues& kv, const std::string& prefix) {
    EvalReport r;
    const auto& labels = require_key(kv, prefix + "labels");
    const auto comma = labels.find(',');
    if (comma == std::string::npos) {
        throw DataError("report: malformed labels '" + labels + "'");
    }
    r.labels = {labels.substr(0, comma), labels.substr(comma + 1)};
    r.n = static_cast<std::size_t>(require_int(kv, prefix + "n"));
    r.correct = static_cast<std::size_t>(require_int(kv, prefix + "correct"));
    r.accuracy = require_double(kv, prefix + "accuracy");
    for (int g = 0; g < 2; ++g) {
        for (int p = 0; p < 2; ++p) {
            r.confusion[g][p] = static_cast<std::size_t>(
                require_int(kv, prefix + "confusion." + r.labels[g] + "." + r.labels[p]));
        }
    }
    return r;
}

SampledEvalReport read_sampled_report(const KeyValues& kv, const std::string& prefix) {
    SampledEvalReport r;
    r.sets = static_cast<std::size_t>(require_int(kv, prefix + "sets"));
    r.set_size = static_cast<std::size_t>(require_int(kv, prefix + "set_size"));
    const auto& seed = require_key(kv, prefix + "seed");
    r.seed = std::stoull(seed);
    std::stringstream ss(require_key(kv, prefix + "per_set"));
    std::string item;
    while (std::getline(ss, item, ',')) {
        KeyValues one{{"v", item}};
        r.per_set.push_back(require_double(one, "v"));
    }
    r.mean = require_double(kv, prefix + "mean");
    r.std_dev = require_double(kv, prefix + "std");
    if (r.per_set.size() != r.sets) {
        throw DataError("report: per_set has " + std::to_string(r.per_set.size()) + " entries, expected " +
                        std::to_string(r.sets));
    }
    return r;
}

}  // namespace lexquad
