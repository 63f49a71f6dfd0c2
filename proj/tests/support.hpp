#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lexquad/analogy.hpp"
#include "lexquad/corpus.hpp"
#include "lexquad/embed_store.hpp"

namespace lexquad::testing {

std::filesystem::path fixture_dir();
std::filesystem::path golden_dir();
std::filesystem::path data_dir();

/// Set LEXQUAD_UPDATE_GOLDENS=1 to rewrite golden files instead of comparing.
bool update_goldens();

std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& text);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// (entailment count, contradiction count) per split, train/dev/test.
struct SplitShape {
    std::size_t entail = 0;
    std::size_t contra = 0;
};

/// Deterministic corpus with word-salad texts over a small legal-ish
/// vocabulary. Case ids are c0000, c0001, ... in split order; each case
/// cites one of `statutes` statutes chosen by the seeded generator.
Corpus synthetic_corpus(const std::array<SplitShape, 3>& shape, std::size_t statutes, std::uint64_t seed);

/// Store whose vectors are seeded by an FNV-1a hash of the key: covers
/// statute, all three case views and pair concat keys of every pair.
EmbeddingStore hashed_store(const Corpus& corpus, std::size_t dim, const std::string& encoder = "hashed-test");

/// Gold quadruple labels for every (query, prototype) pair across the two
/// splits; `invert` yields the anti-oracle.
ExternalPredictions oracle_predictions(const Corpus& corpus, Split queries, Split pool, bool invert = false);

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args);

std::uint64_t fnv1a(std::string_view s);

}  // namespace lexquad::testing
