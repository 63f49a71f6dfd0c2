#include "support.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "lexquad/errors.hpp"
#include "lexquad/io.hpp"

namespace lexquad::testing {

std::filesystem::path fixture_dir() { return std::filesystem::path(LEXQUAD_TEST_DIR) / "fixtures"; }
std::filesystem::path golden_dir() { return std::filesystem::path(LEXQUAD_TEST_DIR) / "golden"; }
std::filesystem::path data_dir() { return std::filesystem::path(LEXQUAD_DATA_DIR); }

bool update_goldens() {
    const char* v = std::getenv("LEXQUAD_UPDATE_GOLDENS");
    return v != nullptr && std::string(v) == "1";
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw DataError("cannot read " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    auto out = open_output(p);
    out << text;
}

TempDir::TempDir() {
    auto tmpl = (std::filesystem::temp_directory_path() / "lexquad-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) {
        throw DataError("mkdtemp failed");
    }
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

const std::vector<std::string> kVocab{
    "taxpayer", "income",   "deduction", "spouse",    "employer", "wages",     "dependent", "credit",
    "property", "gift",     "alimony",   "residence", "tuition",  "penalty",   "return",    "filed",
    "married",  "child",    "business",  "expense",   "interest", "dividend",  "paid",      "received",
    "year",     "section",  "exemption", "household", "blind",    "age",       "gross",     "adjusted",
    "payment",  "contract", "service",   "salary",    "medical",  "insurance", "pension",   "annuity"};

std::string words(std::mt19937_64& rng, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        out += (i == 0 ? "" : " ") + kVocab[rng() % kVocab.size()];
    }
    return out;
}

}  // namespace

Corpus synthetic_corpus(const std::array<SplitShape, 3>& shape, std::size_t statutes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Statute> st;
    for (std::size_t i = 0; i < statutes; ++i) {
        st.push_back({"s" + std::to_string(i), std::to_string(100 + i), words(rng, 12) + "."});
    }
    std::vector<Case> cases;
    SplitLists splits;
    std::size_t next = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        const auto total = shape[s].entail + shape[s].contra;
        for (std::size_t i = 0; i < total; ++i) {
            char id[16];
            std::snprintf(id, sizeof id, "c%04zu", next++);
            Case c;
            c.id = id;
            c.statute_id = st[rng() % st.size()].id;
            c.context = words(rng, 10) + ".";
            c.hypothesis = words(rng, 6) + ".";
            c.gold = i < shape[s].entail ? EntailmentLabel::Entailment : EntailmentLabel::Contradiction;
            splits[s].push_back(c.id);
            cases.push_back(std::move(c));
        }
    }
    return Corpus(std::move(st), std::move(cases), std::move(splits));
}

EmbeddingStore hashed_store(const Corpus& corpus, std::size_t dim, const std::string& encoder) {
    EmbeddingStore store(dim, encoder);
    auto add = [&](const EmbeddingKey& key) {
        std::mt19937_64 rng(fnv1a(key.str()));
        std::normal_distribution<double> g;
        Vector v(dim);
        for (auto& x : v) {
            x = g(rng);
        }
        store.add(key, std::move(v));
    };
    for (const auto& s : corpus.statutes()) {
        add(EmbeddingKey::statute(s.id));
    }
    for (const auto& c : corpus.cases()) {
        for (auto view : {FieldView::H, FieldView::CH, FieldView::SCH}) {
            add(EmbeddingKey::case_view(c.id, view));
        }
        add(EmbeddingKey::pair_concat(c.statute_id, c.id));
    }
    return store;
}

ExternalPredictions oracle_predictions(const Corpus& corpus, Split queries, Split pool, bool invert) {
    ExternalPredictions::Map m;
    for (const auto& q : corpus.pairs(queries)) {
        const auto gq = corpus.get_case(q.case_id).gold;
        for (const auto& p : corpus.pairs(pool)) {
            auto label = label_quadruple(gq, corpus.get_case(p.case_id).gold);
            if (invert) {
                label = flip(label);
            }
            m.emplace(QuadRef{q, p}.quad_id(), label);
        }
    }
    return ExternalPredictions(std::move(m));
}

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace lexquad::testing
