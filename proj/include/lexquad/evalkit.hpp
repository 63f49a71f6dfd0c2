#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lexquad/corpus.hpp"
#include "lexquad/io.hpp"
#include "lexquad/quadgen.hpp"

namespace lexquad {

/// Accuracy with a 2x2 confusion matrix. Class index 0 is the first label in
/// canonical order (entailment; 0 / NotAnalogy), index 1 the second.
struct EvalReport {
    std::array<std::string, 2> labels;
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    /// confusion[gold][predicted]
    std::array<std::array<std::size_t, 2>, 2> confusion{};

    bool operator==(const EvalReport&) const = default;
};

/// Throws UsageError on empty input or length mismatch.
EvalReport accuracy(std::span<const EntailmentLabel> predicted, std::span<const EntailmentLabel> gold);
EvalReport accuracy(std::span<const AnalogyLabel> predicted, std::span<const AnalogyLabel> gold);

/// Always predicts the most frequent gold label; ties go to class index 0.
EvalReport majority_baseline(std::span<const EntailmentLabel> gold);
EvalReport majority_baseline(std::span<const AnalogyLabel> gold);

/// m seeded subsets of `size` items drawn without replacement. Subset i
/// uses sample_without_replacement(n, size, seed + i). Standard deviation is
/// the population one (divide by m).
struct SampledEvalReport {
    std::size_t sets = 0;
    std::size_t set_size = 0;
    std::uint64_t seed = 0;
    std::vector<double> per_set;
    double mean = 0.0;
    double std_dev = 0.0;

    bool operator==(const SampledEvalReport&) const = default;
};

/// `correct[i]` says whether item i was predicted correctly. Throws
/// UsageError when size exceeds the item count or is zero, or m is zero.
SampledEvalReport sampled_accuracy(const std::vector<bool>& correct, std::size_t m, std::size_t size,
                                   std::uint64_t seed);

/// Report files are flat "key = value" text. A file starts with
/// `format_version = 1`; each report section writes its keys under a prefix
/// such as "eval." or "baseline.". Doubles are printed with 17 significant
/// digits so they re-parse exactly.
void write_report_header(std::ostream& out);
void write_report(const EvalReport& report, std::ostream& out, const std::string& prefix = "eval.");
void write_report(const SampledEvalReport& report, std::ostream& out, const std::string& prefix = "sampled.");

/// Throws DataError when the version is missing or unsupported.
void check_report_version(const KeyValues& kv);
EvalReport read_eval_report(const KeyValues& kv, const std::string& prefix = "eval.");
SampledEvalReport read_sampled_report(const KeyValues& kv, const std::string& prefix = "sampled.");

}  // namespace lexquad
