#include <doctest.h>

#include <cmath>
#include <random>

#include "lexquad/errors.hpp"
#include "lexquad/retrieval.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace lexquad;

namespace {

PairText doc(const std::string& sid, const std::string& cid, const std::string& hyp) {
    return {{sid, cid}, "", "", hyp};
}

using Docs = std::vector<std::vector<std::string>>;

}  // namespace

TEST_CASE("tokenizer") {
    using V = std::vector<std::string>;
    CHECK(tokenize("Alice's   income, in 2017-was $33,200!") == V{"alice", "s", "income", "in", "2017", "was", "33", "200"});
    CHECK(tokenize("  ,,  ").empty());
    CHECK(tokenize("caf\xc3\xa9 tax") == V{"caf\xc3\xa9", "tax"});
    CHECK(tokenize("The taxes of the parties", {true, true}) == V{"taxe", "party"});
    CHECK(tokenize("wages bus glass", {true, false}) == V{"wage", "bus", "glass"});
}

TEST_CASE("field views render selected parts in order") {
    const PairText p{{"s1", "c1"}, "STAT", "CTX", "HYP"};
    CHECK(render_view(p, FieldView::H) == "HYP");
    CHECK(render_view(p, FieldView::CH) == "CTX\nHYP");
    CHECK(render_view(p, FieldView::SCH) == "STAT\nCTX\nHYP");
    const PairText no_ctx{{"s1", "c1"}, "STAT", "", "HYP"};
    CHECK(render_view(no_ctx, FieldView::SCH) == "STAT\nHYP");
    CHECK(parse_field_view("sch") == FieldView::SCH);
    CHECK_THROWS_AS(parse_field_view("S"), UsageError);
}

TEST_CASE("BM25 by hand on three documents") {
    // A = "cat sat", B = "cat cat sat", C = "dog ran"; avgdl = 7/3, idf(cat) = idf(sat) = ln 1.6.
    const Docs docs{{"cat", "sat"}, {"cat", "cat", "sat"}, {"dog", "ran"}};
    const auto idx = Bm25Index::build(docs);
    CHECK(idx.avgdl() == doctest::Approx(7.0 / 3.0));
    CHECK(idx.idf("cat") == doctest::Approx(std::log(1.6)));
    CHECK(idx.idf("unicorn") == 0.0);
    const std::vector<std::string> q{"cat", "sat"};
    const double a = bm25_score(idx, q, 0);
    const double b = bm25_score(idx, q, 1);
    CHECK(a == doctest::Approx(0.9983525366047352).epsilon(1e-12));
    CHECK(b == doctest::Approx(1.0190036401511668).epsilon(1e-12));
    CHECK(bm25_score(idx, q, 2) == 0.0);
    CHECK(b > a);
    CHECK_THROWS_AS(bm25_score(idx, q, 3), UsageError);

    const std::vector<std::string> twice{"cat", "sat", "cat", "sat"};
    CHECK(bm25_score(idx, twice, 0) == doctest::Approx(2 * a).epsilon(1e-12));

    Bm25Retriever r({doc("s1", "A", "cat sat"), doc("s1", "B", "cat cat sat"), doc("s1", "C", "dog ran")},
                    FieldView::H);
    const auto hits = r.retrieve(doc("s9", "q", "cat sat"), 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].ref.case_id == "B");
    CHECK(hits[1].ref.case_id == "A");
}

TEST_CASE("incremental builder matches a from-scratch index") {
    const Docs docs{{"a", "b"}, {"b", "c", "c"}, {"a"}, {"d", "e", "a", "a"}};
    Bm25Builder builder;
    for (const auto& d : docs) {
        builder.add(d);
    }
    const auto inc = builder.build();
    const auto full = Bm25Index::build(docs);
    CHECK(inc.document_frequencies() == full.document_frequencies());
    CHECK(inc.avgdl() == full.avgdl());
    const std::vector<std::string> q{"a", "c", "z"};
    for (std::size_t i = 0; i < docs.size(); ++i) {
        CHECK(bm25_score(inc, q, i) == bm25_score(full, q, i));
    }
}

TEST_CASE("BM25 agrees with the naive oracle on fuzzed corpora") {
    std::mt19937_64 rng(99);
    const std::vector<std::string> vocab{"tax", "wage", "spouse", "dependent", "income", "year", "deduct", "blind"};
    for (int trial = 0; trial < 500; ++trial) {
        Docs docs(1 + rng() % 12);
        for (auto& d : docs) {
            const std::size_t len = rng() % 9;
            for (std::size_t i = 0; i < len; ++i) {
                d.push_back(vocab[rng() % vocab.size()]);
            }
        }
        std::vector<std::string> q(1 + rng() % 5);
        for (auto& t : q) {
            t = vocab[rng() % vocab.size()];
        }
        const Bm25Params p{0.5 + static_cast<double>(rng() % 20) / 10.0, static_cast<double>(rng() % 11) / 10.0};
        const auto idx = Bm25Index::build(docs, p);
        for (std::size_t i = 0; i < docs.size(); ++i) {
            const double s = bm25_score(idx, q, i);
            CHECK(s >= 0.0);
            CHECK(s == bm25_score(idx, q, i));
            CHECK(s == doctest::Approx(oracle::bm25(docs, q, i, p.k1, p.b)).epsilon(1e-9));
        }
    }
}

TEST_CASE("BM25 parameter validation") {
    const Docs docs{{"a"}};
    CHECK_THROWS_AS(Bm25Index::build(docs, {0.0, 0.5}), UsageError);
    CHECK_THROWS_AS(Bm25Index::build(docs, {1.2, 1.5}), UsageError);
    CHECK_THROWS_AS(Bm25Index::build(docs, {1.2, -0.1}), UsageError);
    CHECK_THROWS_AS(Bm25Index::build(Docs{}), UsageError);
}

TEST_CASE("top-k ranks by score then pair key") {
    std::vector<Hit> hits{{{"s2", "c1"}, 1.0}, {{"s1", "c2"}, 1.0}, {{"s1", "c1"}, 0.5}, {{"s1", "c3"}, 2.0}};
    const auto r = top_k(hits, 3);
    REQUIRE(r.size() == 3);
    CHECK(r[0].ref == PairRef{"s1", "c3"});
    CHECK(r[1].ref == PairRef{"s1", "c2"});
    CHECK(r[2].ref == PairRef{"s2", "c1"});
    CHECK_THROWS_AS(top_k(hits, 5), UsageError);
    CHECK_THROWS_AS(top_k(hits, 0), UsageError);
}

TEST_CASE("retrievers reject bad pools and k") {
    std::vector<PairText> pool{doc("s1", "a", "x"), doc("s1", "b", "y")};
    Bm25Retriever r(pool, FieldView::H);
    CHECK_THROWS_AS(r.retrieve(doc("s1", "q", "x"), 3), UsageError);
    pool.push_back(doc("s1", "a", "z"));
    CHECK_THROWS_AS(Bm25Retriever(pool, FieldView::H), DataError);
    CHECK_THROWS_AS(make_retriever(Backend::Dense, pool, FieldView::CH, nullptr), UsageError);
    CHECK(parse_backend("dense") == Backend::Dense);
    CHECK_THROWS_AS(parse_backend("faiss"), UsageError);
}

TEST_CASE("dense retrieval ranks by dot product") {
    const auto c = parse_corpus(lexquad::testing::fixture_dir() / "mini_corpus.jsonl");
    auto store = std::make_shared<EmbeddingStore>(lexquad::testing::hashed_store(c, 6));
    std::vector<PairText> pool;
    for (const auto& ref : c.pairs(Split::Train)) {
        pool.push_back(pair_text(c, ref));
    }
    const auto query = pair_text(c, c.pairs(Split::Test).front());
    const auto r = make_retriever(Backend::Dense, pool, FieldView::SCH, store);
    const auto hits = r->retrieve(query, 4);
    const auto& qv = store->get(EmbeddingKey::case_view("c6", FieldView::SCH));
    for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(hits[i].score == dot(qv, store->get(EmbeddingKey::case_view(hits[i].ref.case_id, FieldView::SCH))));
        if (i > 0) {
            CHECK(hits[i - 1].score >= hits[i].score);
        }
    }
    CHECK_THROWS_AS(pair_text(c, {"s1", "c2"}), DataError);
}
