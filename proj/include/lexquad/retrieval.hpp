#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexquad/corpus.hpp"
#include "lexquad/embed_store.hpp"
#include "lexquad/field_view.hpp"

namespace lexquad {

/// Texts of one statute-case pair. Carries no gold label.
struct PairText {
    PairRef ref;
    std::string statute_text;
    std::string context;
    std::string hypothesis;
};

PairText pair_text(const Corpus& corpus, const PairRef& ref);

/// Selected parts in the order statute, context, hypothesis, joined by
/// single newlines. Empty parts are skipped.
std::string render_view(const PairText& pair, FieldView view);

struct TokenizerOptions {
    bool stem = false;            // plural "s" stemmer
    bool drop_stopwords = false;  // small English function-word list
};

/// Lowercases, splits on maximal runs of non-alphanumeric ASCII characters
/// and drops empty tokens. Bytes >= 0x80 are kept inside tokens.
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opts = {});

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 statistics over a fixed document collection.
class Bm25Index {
public:
    using TermCounts = std::unordered_map<std::string, std::uint32_t>;

    /// Throws UsageError for an empty collection or invalid parameters.
    static Bm25Index build(std::span<const std::vector<std::string>> docs, Bm25Params params = {});

    std::size_t doc_count() const noexcept { return doc_len_.size(); }
    double avgdl() const noexcept { return avgdl_; }
    const Bm25Params& params() const noexcept { return params_; }
    std::size_t df(const std::string& term) const;
    const TermCounts& doc_terms(std::size_t doc) const { return doc_terms_.at(doc); }
    std::size_t doc_len(std::size_t doc) const { return doc_len_.at(doc); }
    const std::unordered_map<std::string, std::size_t>& document_frequencies() const noexcept { return df_; }

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); 0 for unindexed terms.
    double idf(const std::string& term) const;

private:
    Bm25Params params_;
    double avgdl_ = 0.0;
    std::unordered_map<std::string, std::size_t> df_;
    std::vector<TermCounts> doc_terms_;
    std::vector<std::size_t> doc_len_;
};

/// Collects documents one at a time; build() snapshots an immutable index.
class Bm25Builder {
public:
    explicit Bm25Builder(Bm25Params params = {}) : params_(params) {}
    void add(std::vector<std::string> tokens) { docs_.push_back(std::move(tokens)); }
    std::size_t size() const noexcept { return docs_.size(); }
    Bm25Index build() const { return Bm25Index::build(docs_, params_); }

private:
    Bm25Params params_;
    std::vector<std::vector<std::string>> docs_;
};

/// Sum over query tokens t (repeats included) of
/// idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avgdl)).
/// Throws UsageError for an unknown document index.
double bm25_score(const Bm25Index& index, std::span<const std::string> query, std::size_t doc);

enum class Backend { Bm25, Dense };

std::string_view to_string(Backend backend);
Backend parse_backend(std::string_view token);

struct Hit {
    PairRef ref;
    double score = 0.0;
};

/// Top hits, descending score, ties broken by ascending pair key.
using RetrievalResult = std::vector<Hit>;

/// Keeps the best `k` hits under the ranking rule above.
RetrievalResult top_k(std::vector<Hit> hits, std::size_t k);

class Retriever {
public:
    virtual ~Retriever() = default;
    virtual std::size_t pool_size() const = 0;
    /// Throws UsageError when k is zero or exceeds the pool.
    virtual RetrievalResult retrieve(const PairText& query, std::size_t k) const = 0;
};

class Bm25Retriever final : public Retriever {
public:
    Bm25Retriever(std::vector<PairText> pool, FieldView view, Bm25Params params = {},
                  TokenizerOptions tokenizer = {});

    std::size_t pool_size() const override { return pool_.size(); }
    RetrievalResult retrieve(const PairText& query, std::size_t k) const override;
    const Bm25Index& index() const noexcept { return index_; }

private:
    std::vector<PairRef> pool_;
    FieldView view_;
    TokenizerOptions tokenizer_;
    Bm25Index index_;
};

/// Dot product between the query's and each prototype's case:<cid>:<view>
/// embeddings.
class DenseRetriever final : public Retriever {
public:
    DenseRetriever(std::vector<PairRef> pool, std::shared_ptr<const EmbeddingStore> store, FieldView view);

    std::size_t pool_size() const override { return entries_.size(); }
    RetrievalResult retrieve(const PairText& query, std::size_t k) const override;

private:
    std::shared_ptr<const EmbeddingStore> store_;
    FieldView view_;
    std::vector<std::pair<PairRef, const Vector*>> entries_;
};

std::unique_ptr<Retriever> make_retriever(Backend backend, const std::vector<PairText>& pool, FieldView view,
                                          std::shared_ptr<const EmbeddingStore> store, Bm25Params params = {},
                                          TokenizerOptions tokenizer = {});

}  // namespace lexquad
