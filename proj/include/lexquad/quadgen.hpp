#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lexquad/corpus.hpp"

namespace lexquad {

/// Serialized as 1 (Analogy) / 0 (NotAnalogy).
enum class AnalogyLabel { NotAnalogy = 0, Analogy = 1 };

std::string_view to_string(AnalogyLabel label);
AnalogyLabel flip(AnalogyLabel label);

/// Analogy iff both pairs carry the same gold entailment label.
AnalogyLabel label_quadruple(EntailmentLabel a, EntailmentLabel b);

/// Two statute-case pairs, in the order they are presented to a scorer.
struct QuadRef {
    PairRef first;
    PairRef second;

    /// "<first.key()>::<second.key()>"
    std::string quad_id() const;
    QuadRef swapped() const { return {second, first}; }

    bool operator==(const QuadRef&) const = default;
};

QuadRef parse_quad_id(std::string_view quad_id);

struct Quadruple : QuadRef {
    AnalogyLabel label = AnalogyLabel::NotAnalogy;

    bool operator==(const Quadruple&) const = default;
};

struct QuadGenOptions {
    bool exclude_same_statute = false;

    bool operator==(const QuadGenOptions&) const = default;
};

struct QuadDataset {
    Split split = Split::Train;
    std::vector<Quadruple> quads;
    QuadGenOptions options;
};

struct QuadStats {
    std::size_t total = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t same_statute = 0;

    bool operator==(const QuadStats&) const = default;
};

/// All unordered pairs of distinct statute-case pairs within `split`, each
/// canonically ordered (first < second), emitted in canonical order.
/// Throws UsageError for an empty split.
QuadDataset generate(const Corpus& corpus, Split split, QuadGenOptions opts = {});

QuadStats stats(const QuadDataset& ds);

/// {quad_id, s1, c1, s2, c2, label}, one per line.
void write_quads(const QuadDataset& ds, std::ostream& out);
/// {quad_id, statute_1, case_1, statute_2, case_2, label} with full texts.
void write_quads_expanded(const QuadDataset& ds, const Corpus& corpus, std::ostream& out);

/// Reads a quad file. `label` may be absent or null for unlabeled quads
/// (for example the ones a retrieval run asks an external model about).
struct QuadRecord {
    QuadRef quad;
    std::optional<AnalogyLabel> label;
};
std::vector<QuadRecord> read_quad_records(std::istream& in);
std::vector<QuadRecord> read_quad_records(const std::filesystem::path& path);

/// Like read_quad_records but every row must be labeled.
std::vector<Quadruple> read_quads(const std::filesystem::path& path);

void write_quad_refs(const std::vector<QuadRef>& quads, std::ostream& out);

/// Parses "0" / "1" (or the JSON integers 0 / 1).
AnalogyLabel parse_analogy_label(std::string_view token);

}  // namespace lexquad
