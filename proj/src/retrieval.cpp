#include "lexquad/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "lexquad/errors.hpp"

namespace lexquad {

PairText pair_text(const Corpus& corpus, const PairRef& ref) {
    const auto& c = corpus.get_case(ref.case_id);
    if (c.statute_id != ref.statute_id) {
        throw DataError("case '" + ref.case_id + "' is not linked to statute '" + ref.statute_id + "'");
    }
    return {ref, corpus.statute(ref.statute_id).text, c.context, c.hypothesis};
}

std::string render_view(const PairText& pair, FieldView view) {
    std::string out;
    auto append = [&](const std::string& part) {
        if (part.empty()) {
            return;
        }
        if (!out.empty()) {
            out.push_back('\n');
        }
        out += part;
    };
    if (view == FieldView::SCH) {
        append(pair.statute_text);
    }
    if (view != FieldView::H) {
        append(pair.context);
    }
    append(pair.hypothesis);
    return out;
}

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words{
        "a",    "an",   "and",  "are", "as",   "at",   "be",    "by",   "for",  "from", "has",
        "have", "he",   "her",  "his", "in",   "is",   "it",    "its",  "of",   "on",   "or",
        "she",  "that", "the",  "to",  "was",  "were", "which", "with", "this", "not",  "under",
    };
    return words;
}

// Harman's S-stemmer.
void strip_plural(std::string& w) {
    const auto ends = [&](std::string_view suf) { return w.size() >= suf.size() && w.ends_with(suf); };
    if (ends("ies") && !ends("eies") && !ends("aies")) {
        w.replace(w.size() - 3, 3, "y");
    } else if (ends("es") && !ends("aes") && !ends("ees") && !ends("oes")) {
        w.pop_back();
    } else if (ends("s") && !ends("us") && !ends("ss") && w.size() > 1) {
        w.pop_back();
    }
}

bool is_token_char(unsigned char ch) { return ch >= 0x80 || std::isalnum(ch) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opts) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) {
            return;
        }
        if (opts.drop_stopwords && stopwords().contains(cur)) {
            cur.clear();
            return;
        }
        if (opts.stem) {
            strip_plural(cur);
        }
        out.push_back(std::move(cur));
        cur.clear();
    };
    for (char raw : text) {
        const auto ch = static_cast<unsigned char>(raw);
        if (is_token_char(ch)) {
            cur.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch)) : raw);
        } else {
            flush();
        }
    }
    flush();
    return out;
}

Bm25Index Bm25Index::build(std::span<const std::vector<std::string>> docs, Bm25Params params) {
    if (docs.empty()) {
        throw UsageError("cannot build a BM25 index over an empty pool");
    }
    if (!(params.k1 > 0.0) || !(params.b >= 0.0 && params.b <= 1.0)) {
        throw UsageError("BM25 parameters out of range (need k1 > 0 and 0 <= b <= 1)");
    }
    Bm25Index idx;
    idx.params_ = params;
    idx.doc_terms_.reserve(docs.size());
    idx.doc_len_.reserve(docs.size());
    std::size_t total = 0;
    for (const auto& doc : docs) {
        TermCounts tf;
        for (const auto& t : doc) {
            ++tf[t];
        }
        for (const auto& [t, n] : tf) {
            ++idx.df_[t];
        }
        idx.doc_terms_.push_back(std::move(tf));
        idx.doc_len_.push_back(doc.size());
        total += doc.size();
    }
    idx.avgdl_ = static_cast<double>(total) / static_cast<double>(docs.size());
    return idx;
}

std::size_t Bm25Index::df(const std::string& term) const {
    const auto it = df_.find(term);
    return it == df_.end() ? 0 : it->second;
}

double Bm25Index::idf(const std::string& term) const {
    const auto n = df(term);
    if (n == 0) {
        return 0.0;
    }
    const auto big_n = static_cast<double>(doc_count());
    const auto d = static_cast<double>(n);
    return std::log(1.0 + (big_n - d + 0.5) / (d + 0.5));
}

double bm25_score(const Bm25Index& index, std::span<const std::string> query, std::size_t doc) {
    if (doc >= index.doc_count()) {
        throw UsageError("unknown document " + std::to_string(doc));
    }
    const auto& terms = index.doc_terms(doc);
    const auto& p = index.params();
    const double len_ratio = index.avgdl() > 0.0 ? static_cast<double>(index.doc_len(doc)) / index.avgdl() : 0.0;
    const double norm = p.k1 * (1.0 - p.b + p.b * len_ratio);
    double score = 0.0;
    for (const auto& t : query) {
        const auto it = terms.find(t);
        if (it == terms.end()) {
            continue;
        }
        const auto tf = static_cast<double>(it->second);
        score += index.idf(t) * tf * (p.k1 + 1.0) / (tf + norm);
    }
    return score;
}

std::string_view to_string(Backend backend) { return backend == Backend::Bm25 ? "bm25" : "dense"; }

Backend parse_backend(std::string_view token) {
    if (token == "bm25") {
        return Backend::Bm25;
    }
    if (token == "dense") {
        return Backend::Dense;
    }
    throw UsageError("unknown backend '" + std::string(token) + "' (expected bm25 or dense)");
}

RetrievalResult top_k(std::vector<Hit> hits, std::size_t k) {
    if (k == 0 || k > hits.size()) {
        throw UsageError("k = " + std::to_string(k) + " must be between 1 and the pool size (" +
                         std::to_string(hits.size()) + ")");
    }
    auto better = [](const Hit& a, const Hit& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.ref < b.ref;
    };
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
    hits.resize(k);
    return hits;
}

namespace {

void require_distinct(const std::vector<PairRef>& refs) {
    std::set<PairRef> seen;
    for (const auto& r : refs) {
        if (!seen.insert(r).second) {
            throw DataError("prototype pool lists pair '" + r.key() + "' twice");
        }
    }
}

}  // namespace

Bm25Retriever::Bm25Retriever(std::vector<PairText> pool, FieldView view, Bm25Params params,
                             TokenizerOptions tokenizer)
    : view_(view), tokenizer_(tokenizer) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(pool.size());
    for (auto& p : pool) {
        docs.push_back(tokenize(render_view(p, view_), tokenizer_));
        pool_.push_back(std::move(p.ref));
    }
    require_distinct(pool_);
    index_ = Bm25Index::build(docs, params);
}

RetrievalResult Bm25Retriever::retrieve(const PairText& query, std::size_t k) const {
    const auto q = tokenize(render_view(query, view_), tokenizer_);
    std::vector<Hit> hits;
    hits.reserve(pool_.size());
    for (std::size_t i = 0; i < pool_.size(); ++i) {
        hits.push_back({pool_[i], bm25_score(index_, q, i)});
    }
    return top_k(std::move(hits), k);
}

DenseRetriever::DenseRetriever(std::vector<PairRef> pool, std::shared_ptr<const EmbeddingStore> store,
                               FieldView view)
    : store_(std::move(store)), view_(view) {
    if (!store_) {
        throw UsageError("dense retrieval needs an embedding store");
    }
    if (pool.empty()) {
        throw UsageError("cannot build a dense index over an empty pool");
    }
    require_distinct(pool);
    entries_.reserve(pool.size());
    for (auto& ref : pool) {
        const auto& v = store_->get(EmbeddingKey::case_view(ref.case_id, view_));
        entries_.emplace_back(std::move(ref), &v);
    }
}

RetrievalResult DenseRetriever::retrieve(const PairText& query, std::size_t k) const {
    const auto& q = store_->get(EmbeddingKey::case_view(query.ref.case_id, view_));
    std::vector<Hit> hits;
    hits.reserve(entries_.size());
    for (const auto& [ref, v] : entries_) {
        hits.push_back({ref, dot(q, *v)});
    }
    return top_k(std::move(hits), k);
}

std::unique_ptr<Retriever> make_retriever(Backend backend, const std::vector<PairText>& pool, FieldView view,
                                          std::shared_ptr<const EmbeddingStore> store, Bm25Params params,
                                          TokenizerOptions tokenizer) {
    if (backend == Backend::Bm25) {
        return std::make_unique<Bm25Retriever>(pool, view, params, tokenizer);
    }
    std::vector<PairRef> refs;
    refs.reserve(pool.size());
    for (const auto& p : pool) {
        refs.push_back(p.ref);
    }
    return std::make_unique<DenseRetriever>(std::move(refs), std::move(store), view);
}

}  // namespace lexquad
