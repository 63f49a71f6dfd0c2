#include "lexquad/pipeline.hpp"

#include <algorithm>
#include <ostream>

#include "lexquad/errors.hpp"
#include "lexquad/io.hpp"

namespace lexquad {

std::string_view to_string(TieBreak rule) {
    switch (rule) {
        case TieBreak::HighestRanked:
            return "highest-ranked";
        case TieBreak::PreferEntailment:
            return "entailment";
        case TieBreak::PreferContradiction:
            return "contradiction";
    }
    return "highest-ranked";
}

TieBreak parse_tie_break(std::string_view token) {
    for (auto r : {TieBreak::HighestRanked, TieBreak::PreferEntailment, TieBreak::PreferContradiction}) {
        if (token == to_string(r)) {
            return r;
        }
    }
    throw UsageError("unknown tie-break rule '" + std::string(token) +
                     "' (expected highest-ranked, entailment or contradiction)");
}

void check_config(const PipelineConfig& config) {
    if (config.k == 0 || config.k % 2 == 0) {
        throw UsageError("k must be a positive odd number, got " + std::to_string(config.k));
    }
}

std::vector<LabeledPair> labeled_pairs(const Corpus& corpus, Split split) {
    std::vector<LabeledPair> out;
    for (const auto& ref : corpus.pairs(split)) {
        out.push_back({pair_text(corpus, ref), corpus.get_case(ref.case_id).gold});
    }
    return out;
}

EntailmentLabel transfer_label(EntailmentLabel neighbor_gold, AnalogyLabel verdict) {
    return verdict == AnalogyLabel::Analogy ? neighbor_gold : opposite(neighbor_gold);
}

EntailmentLabel decide(std::span<const Vote> votes, TieBreak rule, bool* tie_broken) {
    if (votes.empty()) {
        throw DataError("no votes: every neighbor abstained");
    }
    const auto entail = std::count_if(votes.begin(), votes.end(),
                                      [](const Vote& v) { return v.transferred == EntailmentLabel::Entailment; });
    const auto contra = static_cast<std::ptrdiff_t>(votes.size()) - entail;
    if (tie_broken != nullptr) {
        *tie_broken = entail == contra;
    }
    if (entail != contra) {
        return entail > contra ? EntailmentLabel::Entailment : EntailmentLabel::Contradiction;
    }
    switch (rule) {
        case TieBreak::HighestRanked:
            return std::min_element(votes.begin(), votes.end(),
                                    [](const Vote& a, const Vote& b) { return a.rank < b.rank; })
                ->transferred;
        case TieBreak::PreferEntailment:
            return EntailmentLabel::Entailment;
        case TieBreak::PreferContradiction:
            return EntailmentLabel::Contradiction;
    }
    return votes.front().transferred;
}

Pipeline::Pipeline(PipelineConfig config, std::vector<LabeledPair> pool, AnalogyClassifier classifier,
                   std::shared_ptr<const EmbeddingStore> store, Bm25Params bm25, TokenizerOptions tokenizer)
    : config_(config), pool_(std::move(pool)), classifier_(std::move(classifier)) {
    check_config(config_);
    if (pool_.size() < config_.k) {
        throw UsageError("prototype pool has " + std::to_string(pool_.size()) + " pairs, fewer than k = " +
                         std::to_string(config_.k));
    }
    std::vector<PairText> texts;
    texts.reserve(pool_.size());
    for (const auto& p : pool_) {
        pool_gold_.emplace(p.text.ref.key(), p.gold);
        texts.push_back(p.text);
    }
    retriever_ = make_retriever(config_.backend, texts, config_.view, std::move(store), bm25, tokenizer);
}

RetrievalResult Pipeline::neighbors_of(const PairText& query) const {
    if (!config_.exclude_same_statute) {
        return retriever_->retrieve(query, config_.k);
    }
    auto all = retriever_->retrieve(query, retriever_->pool_size());
    std::erase_if(all, [&](const Hit& h) { return h.ref.statute_id == query.ref.statute_id; });
    if (all.size() < config_.k) {
        throw UsageError("fewer than k prototypes remain after excluding the query's statute");
    }
    all.resize(config_.k);
    return all;
}

std::vector<QuadRef> Pipeline::quads_for(const PairText& query) const {
    std::vector<QuadRef> out;
    for (const auto& hit : neighbors_of(query)) {
        out.push_back({query.ref, hit.ref});
    }
    return out;
}

EntailmentPrediction Pipeline::predict(const PairText& query) const {
    EntailmentPrediction pred;
    pred.query = query.ref;
    pred.neighbors = neighbors_of(query);
    for (std::size_t rank = 0; rank < pred.neighbors.size(); ++rank) {
        const auto& hit = pred.neighbors[rank];
        const auto verdict = classify_or_abstain(classifier_, QuadRef{query.ref, hit.ref});
        if (!verdict) {
            ++pred.abstentions;
            continue;
        }
        const auto gold = pool_gold_.at(hit.ref.key());
        pred.votes.push_back({hit.ref, rank, hit.score, *verdict, transfer_label(gold, *verdict)});
    }
    if (pred.votes.empty()) {
        throw DataError("query '" + query.ref.key() + "': all " + std::to_string(pred.abstentions) +
                        " neighbors abstained");
    }
    pred.predicted = decide(pred.votes, config_.tie_break, &pred.tie_broken);
    return pred;
}

RunResult run_all(const Pipeline& pipeline, std::span<const LabeledPair> tests) {
    RunResult run;
    std::vector<EntailmentLabel> predicted;
    for (const auto& t : tests) {
        run.predictions.push_back(pipeline.predict(t.text));
        predicted.push_back(run.predictions.back().predicted);
        run.golds.push_back(t.gold);
    }
    run.report = accuracy(predicted, run.golds);
    return run;
}

void write_prediction_dump(const RunResult& run, const PipelineConfig& config, std::ostream& out) {
    for (std::size_t i = 0; i < run.predictions.size(); ++i) {
        const auto& p = run.predictions[i];
        OrderedJson rec;
        rec["case_id"] = p.query.case_id;
        rec["statute_id"] = p.query.statute_id;
        rec["predicted"] = to_string(p.predicted);
        rec["gold"] = to_string(run.golds[i]);
        rec["k"] = config.k;
        rec["backend"] = to_string(config.backend);
        rec["view"] = to_string(config.view);
        auto votes = OrderedJson::array();
        auto vote_it = p.votes.begin();
        for (std::size_t rank = 0; rank < p.neighbors.size(); ++rank) {
            OrderedJson v;
            v["rank"] = rank + 1;
            v["statute_id"] = p.neighbors[rank].ref.statute_id;
            v["case_id"] = p.neighbors[rank].ref.case_id;
            v["score"] = p.neighbors[rank].score;
            if (vote_it != p.votes.end() && vote_it->rank == rank) {
                v["verdict"] = static_cast<int>(vote_it->verdict);
                v["transferred"] = to_string(vote_it->transferred);
                ++vote_it;
            } else {
                v["verdict"] = nullptr;
                v["transferred"] = nullptr;
            }
            votes.push_back(std::move(v));
        }
        rec["votes"] = std::move(votes);
        rec["abstentions"] = p.abstentions;
        rec["tie_broken"] = p.tie_broken;
        out << rec.dump() << '\n';
    }
}

}  // namespace lexquad
