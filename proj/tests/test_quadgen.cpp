#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "lexquad/errors.hpp"
#include "lexquad/quadgen.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace lexquad;
using lexquad::testing::synthetic_corpus;

TEST_CASE("quadruple label rule") {
    using E = EntailmentLabel;
    CHECK(label_quadruple(E::Entailment, E::Entailment) == AnalogyLabel::Analogy);
    CHECK(label_quadruple(E::Contradiction, E::Contradiction) == AnalogyLabel::Analogy);
    CHECK(label_quadruple(E::Entailment, E::Contradiction) == AnalogyLabel::NotAnalogy);
    CHECK(label_quadruple(E::Contradiction, E::Entailment) == AnalogyLabel::NotAnalogy);
    CHECK(flip(AnalogyLabel::Analogy) == AnalogyLabel::NotAnalogy);
    CHECK(parse_analogy_label("1") == AnalogyLabel::Analogy);
    CHECK(parse_analogy_label("0") == AnalogyLabel::NotAnalogy);
    CHECK_THROWS_AS(parse_analogy_label("2"), DataError);
}

TEST_CASE("quad ids") {
    const QuadRef q{{"s1", "c1"}, {"s2", "c9"}};
    CHECK(q.quad_id() == "s1:c1::s2:c9");
    CHECK(parse_quad_id("s1:c1::s2:c9") == q);
    CHECK(q.swapped().quad_id() == "s2:c9::s1:c1");
    for (const char* bad : {"", "s1:c1", "s1:c1::s2", "s1::c1::s2:c2", "s1:c1::s2:c2:x", ":c1::s2:c2"}) {
        CHECK_THROWS_AS(parse_quad_id(bad), DataError);
    }
}

TEST_CASE("fixture train split") {
    const auto c = parse_corpus(lexquad::testing::fixture_dir() / "mini_corpus.jsonl");
    const auto ds = generate(c, Split::Train);
    REQUIRE(ds.quads.size() == 6);
    CHECK(ds.quads.front().quad_id() == "s1:c1::s1:c4");
    CHECK(ds.quads.front().label == AnalogyLabel::NotAnalogy);
    CHECK(stats(ds) == QuadStats{6, 2, 4, 1});
    CHECK(generate(c, Split::Dev).quads.empty());
    const auto no_same = generate(c, Split::Train, {true});
    CHECK(stats(no_same) == QuadStats{5, 2, 3, 0});
}

TEST_CASE("empty split is a usage error") {
    const auto c = synthetic_corpus({{{2, 2}, {0, 0}, {1, 1}}}, 2, 0);
    CHECK_THROWS_AS(generate(c, Split::Dev), UsageError);
}

TEST_CASE("counting law against brute-force enumeration") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t e = rng() % 16;
        const std::size_t k = rng() % 16;
        if (e + k == 0) {
            continue;
        }
        const auto c = synthetic_corpus({{{e, k}, {0, 0}, {0, 0}}}, 1 + rng() % 5, rng());
        const auto s = stats(generate(c, Split::Train));
        std::vector<EntailmentLabel> labels;
        for (const auto& id : c.split(Split::Train)) {
            labels.push_back(c.get_case(id).gold);
        }
        const auto brute = oracle::enumerate_pairs(labels);
        CHECK(s.total == brute.total);
        CHECK(s.positives == brute.same);
        CHECK(s.negatives == brute.differ);
        CHECK(s.total == oracle::choose2(e + k));
        CHECK(s.positives == oracle::choose2(e) + oracle::choose2(k));
        CHECK(s.negatives == e * k);
        if (e == k) {
            CHECK(s.negatives - s.positives == e);
        }
    }
}

TEST_CASE("generated quadruples are canonical and unique") {
    const auto c = synthetic_corpus({{{7, 6}, {0, 0}, {0, 0}}}, 3, 5);
    const auto ds = generate(c, Split::Train);
    std::set<std::string> ids;
    for (const auto& q : ds.quads) {
        CHECK(q.first < q.second);
        CHECK(ids.insert(q.quad_id()).second);
        CHECK_FALSE(ids.contains(q.swapped().quad_id()));
    }
    for (std::size_t i = 1; i < ds.quads.size(); ++i) {
        const auto& a = ds.quads[i - 1];
        const auto& b = ds.quads[i];
        CHECK((a.first < b.first || (a.first == b.first && a.second < b.second)));
    }
}

TEST_CASE("quad files round-trip") {
    const auto c = synthetic_corpus({{{3, 3}, {0, 0}, {0, 0}}}, 2, 11);
    const auto ds = generate(c, Split::Train);
    std::stringstream buf;
    write_quads(ds, buf);
    const auto back = read_quad_records(buf);
    REQUIRE(back.size() == ds.quads.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].quad == static_cast<const QuadRef&>(ds.quads[i]));
        CHECK(back[i].label == ds.quads[i].label);
    }

    std::ostringstream expanded;
    write_quads_expanded(ds, c, expanded);
    CHECK(expanded.str().find(c.statutes().front().text) != std::string::npos);
    CHECK(expanded.str().find("\"case_1\"") != std::string::npos);

    std::stringstream refs;
    write_quad_refs({ds.quads[0], ds.quads[1]}, refs);
    const auto unlabeled = read_quad_records(refs);
    REQUIRE(unlabeled.size() == 2);
    CHECK_FALSE(unlabeled[0].label.has_value());
}

TEST_CASE("quad file errors") {
    auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_quad_records(in);
    };
    const std::string good = R"({"quad_id":"a:b::c:d","s1":"a","c1":"b","s2":"c","c2":"d","label":1})" "\n";
    CHECK(read(good).size() == 1);
    CHECK_THROWS_WITH_AS(read(good + good), doctest::Contains("duplicate"), ParseError);
    CHECK_THROWS_AS(read(R"({"quad_id":"a:b::c:x","s1":"a","c1":"b","s2":"c","c2":"d","label":1})"), ParseError);
    CHECK_THROWS_AS(read(R"({"quad_id":"a:b::c:d","s1":"a","c1":"b","s2":"c","c2":"d","label":2})"), ParseError);
}
