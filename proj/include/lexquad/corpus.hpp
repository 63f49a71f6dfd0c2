#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexquad {

enum class EntailmentLabel { Entailment, Contradiction };

std::string_view to_string(EntailmentLabel label);
/// Accepts exactly "entailment" / "contradiction"; throws DataError otherwise.
EntailmentLabel parse_entailment_label(std::string_view token);
EntailmentLabel opposite(EntailmentLabel label);

enum class Split { Train, Dev, Test };

inline constexpr std::array<Split, 3> kAllSplits{Split::Train, Split::Dev, Split::Test};

std::string_view to_string(Split split);
/// Throws UsageError for anything other than "train" / "dev" / "test".
Split parse_split(std::string_view token);

struct Statute {
    std::string id;
    std::string section_label;
    std::string text;

    bool operator==(const Statute&) const = default;
};

struct Case {
    std::string id;
    std::string statute_id;
    std::string context;
    std::string hypothesis;
    EntailmentLabel gold = EntailmentLabel::Entailment;

    bool operator==(const Case&) const = default;
};

/// Full case text: context and hypothesis joined by a single space.
std::string case_text(const Case& c);

/// A statute-case pair, identified by ids only.
struct PairRef {
    std::string statute_id;
    std::string case_id;

    /// "<statute_id>:<case_id>"
    std::string key() const;

    bool operator==(const PairRef&) const = default;
    /// Canonical ordering: lexicographic on (statute_id, case_id).
    auto operator<=>(const PairRef&) const = default;
};

using SplitLists = std::array<std::vector<std::string>, 3>;

/// Immutable statute/case collection with train/dev/test membership.
///
/// The constructor does not reject inconsistent data; it only indexes it.
/// `validate()` reports broken invariants and `parse_corpus()` refuses to
/// return a corpus that has any.
class Corpus {
public:
    Corpus() = default;
    Corpus(std::vector<Statute> statutes, std::vector<Case> cases, SplitLists splits);

    const std::vector<Statute>& statutes() const noexcept { return statutes_; }
    const std::vector<Case>& cases() const noexcept { return cases_; }
    const SplitLists& splits() const noexcept { return splits_; }
    const std::vector<std::string>& split(Split s) const { return splits_[static_cast<std::size_t>(s)]; }

    const Statute* find_statute(std::string_view id) const;
    const Case* find_case(std::string_view id) const;

    /// Throws DataError naming the id when absent.
    const Statute& statute(std::string_view id) const;
    const Case& get_case(std::string_view id) const;

    PairRef pair_of(const Case& c) const { return {c.statute_id, c.id}; }
    /// Pairs of a split, in split order.
    std::vector<PairRef> pairs(Split s) const;

    /// Statutes in order; splits in order; cases compared as an id-keyed set.
    bool operator==(const Corpus& other) const;

private:
    std::vector<Statute> statutes_;
    std::vector<Case> cases_;
    SplitLists splits_;
    std::unordered_map<std::string, std::size_t> statute_index_;
    std::unordered_map<std::string, std::size_t> case_index_;
};

struct Violation {
    std::string record_id;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate(const Corpus& corpus);

Corpus parse_corpus(std::istream& in);
Corpus parse_corpus(const std::filesystem::path& path);

/// Statutes first, then cases grouped by split (train, dev, test) in split
/// order, then cases belonging to no split.
void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Moves `n` test cases, sampled without replacement under `seed`, to the
/// end of the dev split. Throws UsageError when n exceeds the test split.
Corpus resplit_test_to_dev(const Corpus& corpus, std::size_t n, std::uint64_t seed);

/// Converts a SARA-style directory tree into a corpus. See README for the
/// expected layout.
Corpus convert_sara(const std::filesystem::path& root);

/// Splits a case text into (context, hypothesis) at the last sentence
/// boundary. The hypothesis is the final sentence.
std::pair<std::string, std::string> split_context_hypothesis(std::string_view text);

}  // namespace lexquad
