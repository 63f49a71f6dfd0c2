#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "lexquad/analogy.hpp"
#include "lexquad/corpus.hpp"
#include "lexquad/embed_store.hpp"
#include "lexquad/errors.hpp"
#include "lexquad/evalkit.hpp"
#include "lexquad/io.hpp"
#include "lexquad/llm_bridge.hpp"
#include "lexquad/pipeline.hpp"
#include "lexquad/quadgen.hpp"
#include "lexquad/retrieval.hpp"

#ifndef LEXQUAD_DATA_DIR
#define LEXQUAD_DATA_DIR "data"
#endif

namespace lexquad::cli {
namespace {

// "-" writes to the caller's stdout stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : path_(path) {
        if (path == "-") {
            os_ = &fallback;
        } else {
            file_ = open_output(path);
            os_ = &file_;
        }
    }

    std::ostream& stream() { return *os_; }

    void close() {
        os_->flush();
        if (!*os_) {
            throw DataError("failed writing '" + path_ + "'");
        }
    }

private:
    std::string path_;
    std::ofstream file_;
    std::ostream* os_ = nullptr;
};

class Progress {
public:
    Progress(std::ostream& err, std::string cmd) : err_(err), cmd_(std::move(cmd)) {}
    void operator()(const std::string& msg) const { err_ << "lexquad " << cmd_ << ": " << msg << '\n'; }

private:
    std::ostream& err_;
    std::string cmd_;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = trim(item);
        if (!t.empty()) {
            out.emplace_back(t);
        }
    }
    return out;
}

KeyScheme parse_key_scheme(std::string_view token) {
    for (auto s : {KeyScheme::Statute, KeyScheme::CaseH, KeyScheme::CaseCH, KeyScheme::CaseSCH,
                   KeyScheme::PairConcat}) {
        if (token == to_string(s) || (s == KeyScheme::PairConcat && token == "pair")) {
            return s;
        }
    }
    throw UsageError("unknown key scheme '" + std::string(token) + "'");
}

const auto kViewNames = CLI::IsMember({"H", "CH", "SCH"}, CLI::ignore_case);
const auto kBackendNames = CLI::IsMember({"bm25", "dense"});
const auto kSplitNames = CLI::IsMember({"train", "dev", "test"});

struct RetrievalFlags {
    std::string backend = "bm25";
    std::size_t k = 3;
    std::string view = "SCH";
    double k1 = 1.2;
    double b = 0.75;
    bool stem = false;
    bool stopwords = false;
};

void add_retrieval_flags(CLI::App* sub, RetrievalFlags& f, bool odd_k) {
    sub->add_option("--backend", f.backend, "Retriever: bm25 or dense")->check(kBackendNames)->capture_default_str();
    auto* k = sub->add_option("--k", f.k, "Neighbors per query")->capture_default_str();
    if (odd_k) {
        k->check(CLI::Validator(
            [](std::string& v) -> std::string {
                long long n = 0;
                std::size_t used = 0;
                try {
                    n = std::stoll(v, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                const bool ok = used == v.size() && n > 0 && n % 2 == 1;
                return ok ? "" : "k must be a positive odd number, got " + v;
            },
            "ODD"));
    } else {
        k->check(CLI::PositiveNumber);
    }
    sub->add_option("--view", f.view, "Field view: H, CH or SCH")->check(kViewNames)->capture_default_str();
    sub->add_option("--k1", f.k1, "BM25 term saturation")->capture_default_str();
    sub->add_option("--b", f.b, "BM25 length normalization")->capture_default_str();
    sub->add_flag("--stem", f.stem, "Strip plural -s before BM25 matching");
    sub->add_flag("--stopwords", f.stopwords, "Drop English function words before BM25 matching");
}

Bm25Params bm25_of(const RetrievalFlags& f) { return {f.k1, f.b}; }
TokenizerOptions tokenizer_of(const RetrievalFlags& f) { return {f.stem, f.stopwords}; }

struct ClassifierFlags {
    std::string kind = "offset";
    std::string model;
    std::string store;
    std::string predictions;
};

void add_classifier_flags(CLI::App* sub, ClassifierFlags& f) {
    sub->add_option("--classifier", f.kind, "Analogy classifier: offset, pair or external")
        ->check(CLI::IsMember({"offset", "pair", "external"}))
        ->capture_default_str();
    sub->add_option("--model", f.model, "Threshold model file (offset, pair)");
    sub->add_option("--predictions", f.predictions, "External predictions file {quad_id, label} (external)");
}

std::shared_ptr<const EmbeddingStore> load_shared_store(const std::string& path) {
    return std::make_shared<const EmbeddingStore>(load_store(std::filesystem::path(path)));
}

AnalogyClassifier make_classifier(const ClassifierFlags& f, const std::shared_ptr<const EmbeddingStore>& store) {
    if (f.kind == "external") {
        if (f.predictions.empty()) {
            throw UsageError("--classifier external needs --predictions");
        }
        return import_external_predictions(std::filesystem::path(f.predictions));
    }
    if (f.model.empty()) {
        throw UsageError("--classifier " + f.kind + " needs --model");
    }
    if (!store) {
        throw UsageError("--classifier " + f.kind + " needs --store");
    }
    const auto model = read_threshold_model(f.model);
    const auto want = f.kind == "offset" ? ScoreMethod::QuadrupleOffset : ScoreMethod::PairConcat;
    if (model.method != want) {
        throw UsageError("threshold model was calibrated for method '" + std::string(to_string(model.method)) +
                         "', not '" + f.kind + "'");
    }
    if (want == ScoreMethod::QuadrupleOffset) {
        return OffsetThreshold{store, model};
    }
    return PairThreshold{store, model};
}

// Analogy predictions joined with gold quadruple labels. Abstentions count
// as wrong in the correctness vector and are left out of the confusion
// matrix.
struct AnalogyOutcome {
    std::vector<AnalogyLabel> predicted;
    std::vector<AnalogyLabel> gold_answered;
    std::vector<AnalogyLabel> gold_all;
    std::vector<bool> correct;
    std::size_t abstentions = 0;
};

void add_outcome(AnalogyOutcome& o, std::optional<AnalogyLabel> predicted, AnalogyLabel gold) {
    o.gold_all.push_back(gold);
    o.correct.push_back(predicted && *predicted == gold);
    if (!predicted) {
        ++o.abstentions;
        return;
    }
    o.predicted.push_back(*predicted);
    o.gold_answered.push_back(gold);
}

void write_analogy_report(const AnalogyOutcome& o, std::ostream& out) {
    write_report_header(out);
    if (!o.predicted.empty()) {
        write_report(accuracy(o.predicted, o.gold_answered), out, "eval.");
    }
    out << "eval.abstentions = " << o.abstentions << '\n';
}

// ---------------------------------------------------------------- commands

struct Context {
    std::ostream& out;
    std::ostream& err;
};

struct ConvertSara {
    std::string root;
    std::string out = "-";

    void attach(CLI::App* sub) {
        sub->add_option("--root", root, "SARA directory with cases/, statutes/ and splits/")
            ->required()
            ->check(CLI::ExistingDirectory);
        sub->add_option("--out", out, "Corpus file to write")->capture_default_str();
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "convert-sara");
        const auto corpus = convert_sara(root);
        Sink sink(out, ctx.out);
        write_corpus(corpus, sink.stream());
        sink.close();
        log("statutes=" + std::to_string(corpus.statutes().size()) +
            " cases=" + std::to_string(corpus.cases().size()) +
            " train=" + std::to_string(corpus.split(Split::Train).size()) +
            " dev=" + std::to_string(corpus.split(Split::Dev).size()) +
            " test=" + std::to_string(corpus.split(Split::Test).size()));
    }
};

struct Validate {
    std::string corpus;
    std::string store;
    std::string schemes = "statute,case:ch";

    void attach(CLI::App* sub) {
        sub->add_option("--corpus", corpus, "Corpus file")->required()->check(CLI::ExistingFile);
        sub->add_option("--store", store, "Embedding store to check against the corpus")
            ->check(CLI::ExistingFile);
        sub->add_option("--schemes", schemes,
                        "Comma list of key schemes the store must cover: statute, case:h, case:ch, "
                        "case:sch, pair")
            ->capture_default_str();
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "validate");
        const auto c = parse_corpus(std::filesystem::path(corpus));
        log("corpus ok: statutes=" + std::to_string(c.statutes().size()) +
            " cases=" + std::to_string(c.cases().size()));
        if (store.empty()) {
            return;
        }
        std::vector<KeyScheme> wanted;
        for (const auto& s : split_list(schemes)) {
            wanted.push_back(parse_key_scheme(s));
        }
        const auto st = load_store(std::filesystem::path(store));
        const auto missing = missing_keys(st, c, wanted);
        for (const auto& k : missing) {
            ctx.out << k << '\n';
        }
        if (!missing.empty()) {
            throw DataError(std::to_string(missing.size()) + " embedding keys missing from the store");
        }
        log("store ok: dim=" + std::to_string(st.dim()) + " keys=" + std::to_string(st.size()));
    }
};

struct Resplit {
    std::string corpus;
    std::string out = "-";
    std::size_t n = 20;
    std::uint64_t seed = 0;

    void attach(CLI::App* sub) {
        sub->add_option("--corpus", corpus, "Corpus file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "Corpus file to write")->capture_default_str();
        sub->add_option("--n", n, "Test cases to move into dev")->capture_default_str();
        sub->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "resplit");
        const auto moved = resplit_test_to_dev(parse_corpus(std::filesystem::path(corpus)), n, seed);
        Sink sink(out, ctx.out);
        write_corpus(moved, sink.stream());
        sink.close();
        log("train=" + std::to_string(moved.split(Split::Train).size()) +
            " dev=" + std::to_string(moved.split(Split::Dev).size()) +
            " test=" + std::to_string(moved.split(Split::Test).size()));
    }
};

struct QuadGen {
    std::string corpus;
    std::string split;
    std::string out = "-";
    bool expanded = false;
    bool exclude_same_statute = false;

    void attach(CLI::App* sub) {
        sub->add_option("--corpus", corpus, "Corpus file")->required()->check(CLI::ExistingFile);
        sub->add_option("--split", split, "Split to expand: train, dev or test")->required()->check(kSplitNames);
        sub->add_option("--out", out, "Quadruple file to write")->capture_default_str();
        sub->add_flag("--expanded", expanded, "Write statute and case texts instead of ids");
        sub->add_flag("--exclude-same-statute", exclude_same_statute,
                      "Skip quadruples whose two pairs cite the same statute");
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "quadgen");
        const auto c = parse_corpus(std::filesystem::path(corpus));
        const auto ds = generate(c, parse_split(split), {exclude_same_statute});
        Sink sink(out, ctx.out);
        if (expanded) {
            write_quads_expanded(ds, c, sink.stream());
        } else {
            write_quads(ds, sink.stream());
        }
        sink.close();
        const auto s = stats(ds);
        log("split=" + split + " quads=" + std::to_string(s.total) + " analogy=" + std::to_string(s.positives) +
            " not_analogy=" + std::to_string(s.negatives) + " same_statute=" + std::to_string(s.same_statute));
    }
};

struct Score {
    std::string quads;
    std::string store;
    std::string method = "offset";
    std::string case_view = "CH";
    std::string out = "-";

    void attach(CLI::App* sub) {
        sub->add_option("--quads", quads, "Quadruple file")->required()->check(CLI::ExistingFile);
        sub->add_option("--store", store, "Embedding store")->required()->check(CLI::ExistingFile);
        sub->add_option("--method", method, "Scorer: offset or pair")
            ->check(CLI::IsMember({"offset", "pair"}))
            ->capture_default_str();
        sub->add_option("--case-view", case_view, "Case embedding used by the offset scorer: H, CH or SCH")
            ->check(kViewNames)
            ->capture_default_str();
        sub->add_option("--out", out, "Score file to write")->capture_default_str();
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "score");
        const auto st = load_store(std::filesystem::path(store));
        const auto m = parse_score_method(method);
        const auto view = parse_field_view(case_view);
        std::vector<AnalogyScore> scores;
        for (const auto& rec : read_quad_records(std::filesystem::path(quads))) {
            scores.push_back(m == ScoreMethod::QuadrupleOffset ? score_quadruple_offset(st, rec.quad, view)
                                                               : score_pair_concat(st, rec.quad));
        }
        Sink sink(out, ctx.out);
        write_scores(scores, sink.stream());
        sink.close();
        log("method=" + method + " scored=" + std::to_string(scores.size()));
    }
};

struct Calibrate {
    std::string scores;
    std::string quads;
    std::string case_view = "CH";
    std::string out = "-";

    void attach(CLI::App* sub) {
        sub->add_option("--scores", scores, "Score file of the dev quadruples")->required()->check(CLI::ExistingFile);
        sub->add_option("--quads", quads, "Labeled dev quadruple file")->required()->check(CLI::ExistingFile);
        sub->add_option("--case-view", case_view, "Case view the scores were computed with: H, CH or SCH")
            ->check(kViewNames)
            ->capture_default_str();
        sub->add_option("--out", out, "Threshold model file to write")->capture_default_str();
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "calibrate");
        std::unordered_map<std::string, AnalogyLabel> gold;
        for (const auto& q : read_quads(std::filesystem::path(quads))) {
            gold.emplace(q.quad_id(), q.label);
        }
        const auto rows = read_scores(std::filesystem::path(scores));
        if (rows.empty()) {
            throw DataError("score file is empty");
        }
        std::vector<LabeledScore> labeled;
        for (const auto& r : rows) {
            if (r.method != rows.front().method) {
                throw DataError("score file mixes methods '" + std::string(to_string(r.method)) + "' and '" +
                                std::string(to_string(rows.front().method)) + "'");
            }
            const auto it = gold.find(r.quad_id);
            if (it == gold.end()) {
                throw MissingKeyError(r.quad_id, "no gold label for scored quadruple '" + r.quad_id + "'");
            }
            labeled.push_back({r.value, it->second});
        }
        auto model = calibrate_threshold(labeled, rows.front().method);
        model.case_view = parse_field_view(case_view);
        Sink sink(out, ctx.out);
        write_threshold_model(model, sink.stream());
        sink.close();
        log("method=" + std::string(to_string(model.method)) + " threshold=" + format_double(model.threshold) +
            " dev_accuracy=" + format_double(model.dev_accuracy));
    }
};

struct Classify {
    std::string quads;
    ClassifierFlags classifier;
    std::string out = "-";
    std::string report;

    void attach(CLI::App* sub) {
        sub->add_option("--quads", quads, "Quadruple file")->required()->check(CLI::ExistingFile);
        add_classifier_flags(sub, classifier);
        sub->add_option("--store", classifier.store, "Embedding store (offset, pair)")->check(CLI::ExistingFile);
        sub->add_option("--out", out, "Predictions file to write")->capture_default_str();
        sub->add_option("--report", report, "Also write an accuracy report (needs labeled quadruples)");
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "classify");
        const auto store = classifier.store.empty() ? nullptr : load_shared_store(classifier.store);
        const auto clf = make_classifier(classifier, store);
        const auto records = read_quad_records(std::filesystem::path(quads));
        std::vector<PredictionRow> rows;
        for (const auto& rec : records) {
            rows.push_back({rec.quad.quad_id(), classify_or_abstain(clf, rec.quad)});
        }
        Sink sink(out, ctx.out);
        write_predictions(rows, sink.stream());
        sink.close();
        log("classified=" + std::to_string(rows.size()));
        if (report.empty()) {
            return;
        }
        AnalogyOutcome o;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (!records[i].label) {
                throw DataError("--report needs gold labels; quadruple '" + rows[i].quad_id + "' has none");
            }
            add_outcome(o, rows[i].label, *records[i].label);
        }
        Sink rs(report, ctx.out);
        write_analogy_report(o, rs.stream());
        rs.close();
    }
};

struct Retrieve {
    std::string corpus;
    std::string split = "test";
    std::string pool_split = "train";
    RetrievalFlags flags;
    std::string store;
    std::string out = "-";

    void attach(CLI::App* sub) {
        sub->add_option("--corpus", corpus, "Corpus file")->required()->check(CLI::ExistingFile);
        sub->add_option("--split", split, "Query split")->check(kSplitNames)->capture_default_str();
        sub->add_option("--pool-split", pool_split, "Prototype split")->check(kSplitNames)->capture_default_str();
        add_retrieval_flags(sub, flags, false);
        sub->add_option("--store", store, "Embedding store (dense backend)")->check(CLI::ExistingFile);
        sub->add_option("--out", out, "Neighbor file to write")->capture_default_str();
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "retrieve");
        const auto c = parse_corpus(std::filesystem::path(corpus));
        const auto backend = parse_backend(flags.backend);
        if (backend == Backend::Dense && store.empty()) {
            throw UsageError("--backend dense needs --store");
        }
        std::vector<PairText> pool;
        for (const auto& ref : c.pairs(parse_split(pool_split))) {
            pool.push_back(pair_text(c, ref));
        }
        const auto retriever = make_retriever(backend, pool, parse_field_view(flags.view),
                                              store.empty() ? nullptr : load_shared_store(store), bm25_of(flags),
                                              tokenizer_of(flags));
        Sink sink(out, ctx.out);
        std::size_t queries = 0;
        for (const auto& ref : c.pairs(parse_split(split))) {
            const auto hits = retriever->retrieve(pair_text(c, ref), flags.k);
            for (std::size_t r = 0; r < hits.size(); ++r) {
                OrderedJson rec;
                rec["query_case_id"] = ref.case_id;
                rec["rank"] = r + 1;
                rec["statute_id"] = hits[r].ref.statute_id;
                rec["case_id"] = hits[r].ref.case_id;
                rec["score"] = hits[r].score;
                sink.stream() << rec.dump() << '\n';
            }
            ++queries;
        }
        sink.close();
        log("backend=" + flags.backend + " view=" + flags.view + " k=" + std::to_string(flags.k) +
            " queries=" + std::to_string(queries));
    }
};

struct Entail {
    std::string corpus;
    std::string split = "test";
    std::string pool_split = "train";
    RetrievalFlags flags;
    ClassifierFlags classifier;
    std::string tie_break = "highest-ranked";
    bool exclude_same_statute = false;
    std::string out = "-";
    std::string report;
    std::string emit_quads;
    bool sweep = false;
    std::string sweep_k = "1,3,5,7,9";
    std::string sweep_views = "H,CH,SCH";
    std::string sweep_backends = "bm25";

    void attach(CLI::App* sub) {
        sub->add_option("--corpus", corpus, "Corpus file")->required()->check(CLI::ExistingFile);
        sub->add_option("--split", split, "Split to predict")->check(kSplitNames)->capture_default_str();
        sub->add_option("--pool-split", pool_split, "Prototype split")->check(kSplitNames)->capture_default_str();
        add_retrieval_flags(sub, flags, true);
        add_classifier_flags(sub, classifier);
        sub->add_option("--store", classifier.store, "Embedding store (dense backend, offset, pair)")
            ->check(CLI::ExistingFile);
        sub->add_option("--tie-break", tie_break, "Even split after abstentions: highest-ranked, entailment, "
                                                  "contradiction")
            ->check(CLI::IsMember({"highest-ranked", "entailment", "contradiction"}))
            ->capture_default_str();
        sub->add_flag("--exclude-same-statute", exclude_same_statute,
                      "Skip prototypes citing the query's statute");
        sub->add_option("--out", out, "Prediction dump to write")->capture_default_str();
        sub->add_option("--report", report, "Accuracy report to write");
        sub->add_option("--emit-quads", emit_quads,
                        "Write the (query, neighbor) quadruples to classify and stop; no classifier needed");
        sub->add_flag("--sweep", sweep, "Run every cell of the k x view x backend grid; one report section per cell");
        sub->add_option("--sweep-k", sweep_k, "Comma list of odd k values for --sweep")->capture_default_str();
        sub->add_option("--sweep-views", sweep_views, "Comma list of views for --sweep")->capture_default_str();
        sub->add_option("--sweep-backends", sweep_backends, "Comma list of backends for --sweep")
            ->capture_default_str();
    }

    struct Cell {
        Backend backend;
        FieldView view;
        std::size_t k;
    };

    std::vector<Cell> cells() const {
        if (!sweep) {
            return {{parse_backend(flags.backend), parse_field_view(flags.view), flags.k}};
        }
        std::vector<Cell> out;
        for (const auto& b : split_list(sweep_backends)) {
            for (const auto& v : split_list(sweep_views)) {
                for (const auto& k : split_list(sweep_k)) {
                    std::size_t kv = 0;
                    try {
                        kv = std::stoul(k);
                    } catch (const std::exception&) {
                        throw UsageError("--sweep-k: '" + k + "' is not a number");
                    }
                    out.push_back({parse_backend(b), parse_field_view(v), kv});
                }
            }
        }
        if (out.empty()) {
            throw UsageError("--sweep grid is empty");
        }
        return out;
    }

    PipelineConfig config_of(const Cell& cell) const {
        PipelineConfig cfg;
        cfg.backend = cell.backend;
        cfg.view = cell.view;
        cfg.k = cell.k;
        cfg.tie_break = parse_tie_break(tie_break);
        cfg.exclude_same_statute = exclude_same_statute;
        check_config(cfg);
        return cfg;
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "entail");
        const auto grid = cells();
        for (const auto& cell : grid) {
            config_of(cell);
        }
        const auto c = parse_corpus(std::filesystem::path(corpus));
        const auto store = classifier.store.empty() ? nullptr : load_shared_store(classifier.store);
        for (const auto& cell : grid) {
            if (cell.backend == Backend::Dense && !store) {
                throw UsageError("--backend dense needs --store");
            }
        }
        const auto pool = labeled_pairs(c, parse_split(pool_split));
        const auto tests = labeled_pairs(c, parse_split(split));
        if (tests.empty()) {
            throw UsageError("split '" + split + "' has no cases");
        }

        if (!emit_quads.empty()) {
            std::set<std::string> seen;
            std::vector<QuadRef> quads;
            for (const auto& cell : grid) {
                const Pipeline p(config_of(cell), pool, ExternalPredictions{}, store, bm25_of(flags),
                                 tokenizer_of(flags));
                for (const auto& t : tests) {
                    for (const auto& q : p.quads_for(t.text)) {
                        if (seen.insert(q.quad_id()).second) {
                            quads.push_back(q);
                        }
                    }
                }
            }
            std::sort(quads.begin(), quads.end(),
                      [](const QuadRef& a, const QuadRef& b) { return a.quad_id() < b.quad_id(); });
            Sink sink(emit_quads, ctx.out);
            write_quad_refs(quads, sink.stream());
            sink.close();
            log("emitted quads=" + std::to_string(quads.size()));
            return;
        }

        const auto clf = make_classifier(classifier, store);
        std::ostringstream reports;
        write_report_header(reports);
        for (const auto& cell : grid) {
            const auto cfg = config_of(cell);
            const Pipeline p(cfg, pool, clf, store, bm25_of(flags), tokenizer_of(flags));
            const auto result = run_all(p, tests);
            const std::string cell_name = std::string(to_string(cfg.backend)) + "." +
                                          std::string(to_string(cfg.view)) + ".k" + std::to_string(cfg.k);
            log(cell_name + " accuracy=" + format_double(result.report.accuracy) + " (" +
                std::to_string(result.report.correct) + "/" + std::to_string(result.report.n) + ")");
            if (sweep) {
                write_report(result.report, reports, "sweep." + cell_name + ".");
            } else {
                write_report(result.report, reports, "eval.");
                Sink sink(out, ctx.out);
                write_prediction_dump(result, cfg, sink.stream());
                sink.close();
            }
        }
        if (!report.empty() || sweep) {
            Sink rs(report.empty() ? "-" : report, ctx.out);
            rs.stream() << reports.str();
            rs.close();
        }
    }
};

struct Eval {
    std::string dump;
    std::string predictions;
    std::string quads;
    bool baseline = false;
    std::string sampled;
    std::uint64_t seed = 0;
    std::string out = "-";

    void attach(CLI::App* sub) {
        sub->add_option("--dump", dump, "Entailment prediction dump written by entail")->check(CLI::ExistingFile);
        sub->add_option("--predictions", predictions, "Analogy predictions {quad_id, label}")
            ->check(CLI::ExistingFile);
        sub->add_option("--quads", quads, "Labeled quadruples scored against --predictions")
            ->check(CLI::ExistingFile);
        sub->add_flag("--baseline", baseline, "Add the majority-label baseline");
        sub->add_option("--sampled", sampled, "Seeded subsets, as MxN (e.g. 5x100)");
        sub->add_option("--seed", seed, "Seed of the first subset; subset i uses seed + i")->capture_default_str();
        sub->add_option("--out", out, "Report file to write")->capture_default_str();
    }

    std::pair<std::size_t, std::size_t> sampled_shape() const {
        const auto x = sampled.find('x');
        try {
            if (x != std::string::npos) {
                std::size_t used_m = 0;
                std::size_t used_n = 0;
                const auto m = std::stoul(sampled.substr(0, x), &used_m);
                const auto n = std::stoul(sampled.substr(x + 1), &used_n);
                if (used_m == x && used_n == sampled.size() - x - 1) {
                    return {m, n};
                }
            }
        } catch (const std::exception&) {
        }
        throw UsageError("--sampled expects MxN, got '" + sampled + "'");
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "eval");
        if (dump.empty() == predictions.empty()) {
            throw UsageError("give exactly one of --dump or --predictions");
        }
        if (!predictions.empty() && quads.empty()) {
            throw UsageError("--predictions needs --quads");
        }
        std::optional<std::pair<std::size_t, std::size_t>> shape;
        if (!sampled.empty()) {
            shape = sampled_shape();
        }

        std::ostringstream body;
        std::vector<bool> correct;
        if (!dump.empty()) {
            std::vector<EntailmentLabel> predicted;
            std::vector<EntailmentLabel> gold;
            auto in = open_input(dump);
            for_each_jsonl(in, [&](std::size_t line, const Json& rec) {
                predicted.push_back(parse_entailment_label(require_string(rec, "predicted", line)));
                gold.push_back(parse_entailment_label(require_string(rec, "gold", line)));
            });
            write_report_header(body);
            write_report(accuracy(predicted, gold), body, "eval.");
            if (baseline) {
                write_report(majority_baseline(gold), body, "baseline.");
            }
            for (std::size_t i = 0; i < gold.size(); ++i) {
                correct.push_back(predicted[i] == gold[i]);
            }
        } else {
            const auto preds = import_external_predictions(std::filesystem::path(predictions));
            AnalogyOutcome o;
            for (const auto& q : read_quads(std::filesystem::path(quads))) {
                add_outcome(o, preds.lookup(q), q.label);
            }
            write_analogy_report(o, body);
            if (baseline) {
                write_report(majority_baseline(o.gold_all), body, "baseline.");
            }
            correct = o.correct;
        }
        if (shape) {
            const auto r = sampled_accuracy(correct, shape->first, shape->second, seed);
            write_report(r, body, "sampled.");
            log("sampled mean=" + format_double(r.mean) + " std=" + format_double(r.std_dev));
        }
        Sink sink(out, ctx.out);
        sink.stream() << body.str();
        sink.close();
        log("items=" + std::to_string(correct.size()));
    }
};

struct PromptGen {
    std::string corpus;
    std::string quads;
    std::string kind = "zero-shot";
    std::size_t shots = 3;
    bool zero_cot = false;
    std::string exemplar_quads;
    std::string cot_exemplars;
    std::uint64_t seed = 0;
    std::string out = "-";

    void attach(CLI::App* sub) {
        sub->add_option("--corpus", corpus, "Corpus file")->required()->check(CLI::ExistingFile);
        sub->add_option("--quads", quads, "Quadruples to render")->required()->check(CLI::ExistingFile);
        sub->add_option("--kind", kind, "Prompt style: zero-shot, few-shot or cot")
            ->check(CLI::IsMember({"zero-shot", "few-shot", "cot"}))
            ->capture_default_str();
        sub->add_option("--shots", shots, "Exemplars per few-shot prompt")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_flag("--zero-cot", zero_cot, "Append the step-by-step trigger after the final answer cue");
        sub->add_option("--exemplar-quads", exemplar_quads, "Labeled training quadruples to draw few-shot exemplars from")
            ->check(CLI::ExistingFile);
        sub->add_option("--cot-exemplars", cot_exemplars,
                        "Chain-of-thought exemplar file (default: the bundled six)")
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Exemplar sampling seed")->capture_default_str();
        sub->add_option("--out", out, "Prompt file {quad_id, prompt} to write")->capture_default_str();
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "prompt-gen");
        PromptSpec spec;
        spec.kind = parse_prompt_kind(kind);
        spec.zero_cot = zero_cot;
        std::vector<Quadruple> pool;
        if (spec.kind == PromptKind::FewShot) {
            if (exemplar_quads.empty()) {
                throw UsageError("--kind few-shot needs --exemplar-quads");
            }
            pool = read_quads(std::filesystem::path(exemplar_quads));
        }
        if (spec.kind == PromptKind::HandCraftedCoT) {
            spec.cot = load_cot_exemplars(cot_exemplars.empty()
                                              ? std::filesystem::path(LEXQUAD_DATA_DIR) / "cot_exemplars.jsonl"
                                              : std::filesystem::path(cot_exemplars));
        }
        const auto c = parse_corpus(std::filesystem::path(corpus));
        Sink sink(out, ctx.out);
        std::size_t n = 0;
        for (const auto& rec : read_quad_records(std::filesystem::path(quads))) {
            if (spec.kind == PromptKind::FewShot) {
                spec.exemplars = select_exemplars(pool, shots, seed, &rec.quad);
            }
            OrderedJson row;
            row["quad_id"] = rec.quad.quad_id();
            row["prompt"] = build_prompt(spec, rec.quad, c);
            sink.stream() << row.dump() << '\n';
            ++n;
        }
        sink.close();
        log("kind=" + kind + " prompts=" + std::to_string(n));
    }
};

struct LlmRun {
    std::string prompts;
    LlmEndpointConfig endpoint;
    long long backoff_ms = 500;
    long long timeout_s = 60;
    std::size_t in_flight = 4;
    double rps = 0.0;
    std::string log_path;
    std::string raw_out;
    std::string out = "-";

    void attach(CLI::App* sub) {
        sub->add_option("--prompts", prompts, "Prompt file written by prompt-gen")->required()->check(CLI::ExistingFile);
        sub->add_option("--url", endpoint.base_url, "Completion endpoint URL")->required();
        sub->add_option("--model", endpoint.model, "Model name sent with each request")->required();
        sub->add_option("--temperature", endpoint.temperature, "Sampling temperature")->capture_default_str();
        sub->add_option("--max-tokens", endpoint.max_tokens, "Completion token limit")->capture_default_str();
        sub->add_option("--api-key-env", endpoint.api_key_env, "Environment variable holding the API key")
            ->capture_default_str();
        sub->add_option("--max-attempts", endpoint.retry.max_attempts, "Attempts per request")
            ->capture_default_str();
        sub->add_option("--backoff-ms", backoff_ms, "First retry delay; doubles per attempt")->capture_default_str();
        sub->add_option("--timeout-s", timeout_s, "Per-request timeout")->capture_default_str();
        sub->add_option("--in-flight", in_flight, "Concurrent requests")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--rps", rps, "Requests per second; 0 disables pacing")->capture_default_str();
        sub->add_option("--log", log_path, "Request/response log to write");
        sub->add_option("--raw-out", raw_out, "Raw completions {quad_id, verdict, raw} to write");
        sub->add_option("--out", out, "Predictions file {quad_id, label} to write")->capture_default_str();
    }

    void run(Context& ctx) const {
        const Progress log(ctx.err, "llm-run");
        auto cfg = endpoint;
        cfg.retry.backoff_base = std::chrono::milliseconds(backoff_ms);
        cfg.timeout = std::chrono::seconds(timeout_s);
        check_config(cfg);
        if (std::getenv(cfg.api_key_env.c_str()) == nullptr) {
            throw UsageError("environment variable " + cfg.api_key_env + " is not set");
        }
        std::vector<LlmJob> jobs;
        std::set<std::string> seen;
        {
            auto in = open_input(prompts);
            for_each_jsonl(in, [&](std::size_t line, const Json& rec) {
                auto id = require_string(rec, "quad_id", line);
                if (!seen.insert(id).second) {
                    throw ParseError(line, "duplicate quad_id '" + id + "'");
                }
                jobs.push_back({std::move(id), require_string(rec, "prompt", line)});
            });
        }
        std::ofstream log_file;
        std::optional<RequestLog> request_log;
        if (!log_path.empty()) {
            log_file = open_output(log_path);
            request_log.emplace(&log_file);
        }
        const auto outcomes = run_llm_jobs(cfg, jobs, in_flight, rps, request_log ? &*request_log : nullptr);

        std::vector<PredictionRow> rows;
        std::map<Verdict, std::size_t> tally;
        for (const auto& o : outcomes) {
            rows.push_back({o.quad_id, to_analogy_label(o.parsed.verdict)});
            ++tally[o.parsed.verdict];
        }
        Sink sink(out, ctx.out);
        write_predictions(rows, sink.stream());
        sink.close();
        if (!raw_out.empty()) {
            Sink raw(raw_out, ctx.out);
            for (const auto& o : outcomes) {
                OrderedJson rec;
                rec["quad_id"] = o.quad_id;
                rec["verdict"] = to_string(o.parsed.verdict);
                rec["raw"] = o.parsed.raw;
                raw.stream() << rec.dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
            }
            raw.close();
        }
        log("yes=" + std::to_string(tally[Verdict::Yes]) + " no=" + std::to_string(tally[Verdict::No]) +
            " abstain=" + std::to_string(tally[Verdict::Abstain]));
    }
};

// ------------------------------------------------------------------ config

std::optional<std::string> config_path_of(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            return args[i + 1];
        }
        if (args[i].rfind("--config=", 0) == 0) {
            return args[i].substr(9);
        }
    }
    return std::nullopt;
}

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Unknown sections or keys are usage errors; a key also given as a flag to
// the invoked subcommand produces a warning (the flag wins).
void check_config_file(CLI::App& app, const std::string& path, const std::vector<std::string>& args,
                       std::ostream& err) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open config file '" + path + "'");
    }
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::ParseError& e) {
        throw UsageError("config file '" + path + "': " + e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") {
            continue;
        }
        if (item.parents.size() != 1) {
            throw UsageError("config file '" + path + "': key '" + item.fullname() +
                             "' must sit in a [subcommand] section");
        }
        const auto& section = item.parents.front();
        CLI::App* sub = nullptr;
        try {
            sub = app.get_subcommand(section);
        } catch (const CLI::OptionNotFound&) {
            throw UsageError("config file '" + path + "': unknown section [" + section + "]");
        }
        const auto flag = "--" + item.name;
        if (sub->get_option_no_throw(flag) == nullptr) {
            throw UsageError("config file '" + path + "': [" + section + "] has no key '" + item.name + "'");
        }
        const bool active = std::find(args.begin(), args.end(), section) != args.end();
        if (active && flag_given(args, flag)) {
            std::string value;
            for (const auto& v : item.inputs) {
                value += (value.empty() ? "" : " ") + v;
            }
            err << "lexquad: warning: " << flag << " on the command line overrides [" << section << "] "
                << item.name << " = " << value << '\n';
        }
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Statute/case entailment through analogy quadruples", "lexquad"};
    app.set_config("--config", "", "Sectioned key = value file; [subcommand] sections set flag defaults");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    ConvertSara convert_sara_cmd;
    Validate validate_cmd;
    Resplit resplit_cmd;
    QuadGen quadgen_cmd;
    Score score_cmd;
    Calibrate calibrate_cmd;
    Classify classify_cmd;
    Retrieve retrieve_cmd;
    Entail entail_cmd;
    Eval eval_cmd;
    PromptGen prompt_gen_cmd;
    LlmRun llm_run_cmd;

    convert_sara_cmd.attach(app.add_subcommand("convert-sara", "Convert a SARA directory into a corpus file"));
    validate_cmd.attach(app.add_subcommand("validate", "Check a corpus, and optionally a store against it"));
    resplit_cmd.attach(app.add_subcommand("resplit", "Move seeded test cases into dev"));
    quadgen_cmd.attach(app.add_subcommand("quadgen", "Expand one split into labeled quadruples"));
    score_cmd.attach(app.add_subcommand("score", "Cosine-score quadruples from an embedding store"));
    calibrate_cmd.attach(app.add_subcommand("calibrate", "Fit the analogy threshold on dev scores"));
    classify_cmd.attach(app.add_subcommand("classify", "Label quadruples with an analogy classifier"));
    retrieve_cmd.attach(app.add_subcommand("retrieve", "List the nearest prototypes of each query pair"));
    entail_cmd.attach(app.add_subcommand("entail", "Predict entailment by retrieval and analogy voting"));
    eval_cmd.attach(app.add_subcommand("eval", "Accuracy, baseline and sampled-subset reports"));
    prompt_gen_cmd.attach(app.add_subcommand("prompt-gen", "Render analogy prompts without calling a model"));
    llm_run_cmd.attach(app.add_subcommand("llm-run", "Send prompts to a completion endpoint and parse verdicts"));

    Context ctx{out, err};
    try {
        if (const auto cfg = config_path_of(args)) {
            check_config_file(app, *cfg, args, err);
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try {
            app.parse(reversed);
        } catch (const CLI::ParseError& e) {
            return app.exit(e, out, err) == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
        }
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "convert-sara") {
            convert_sara_cmd.run(ctx);
        } else if (name == "validate") {
            validate_cmd.run(ctx);
        } else if (name == "resplit") {
            resplit_cmd.run(ctx);
        } else if (name == "quadgen") {
            quadgen_cmd.run(ctx);
        } else if (name == "score") {
            score_cmd.run(ctx);
        } else if (name == "calibrate") {
            calibrate_cmd.run(ctx);
        } else if (name == "classify") {
            classify_cmd.run(ctx);
        } else if (name == "retrieve") {
            retrieve_cmd.run(ctx);
        } else if (name == "entail") {
            entail_cmd.run(ctx);
        } else if (name == "eval") {
            eval_cmd.run(ctx);
        } else if (name == "prompt-gen") {
            prompt_gen_cmd.run(ctx);
        } else if (name == "llm-run") {
            llm_run_cmd.run(ctx);
        }
    } catch (const Error& e) {
        err << "lexquad: error: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "lexquad: error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Data);
    } catch (const std::exception& e) {
        err << "lexquad: error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Data);
    }
    return 0;
}

}  // namespace lexquad::cli
