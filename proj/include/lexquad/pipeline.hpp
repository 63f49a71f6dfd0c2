#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lexquad/analogy.hpp"
#include "lexquad/evalkit.hpp"
#include "lexquad/retrieval.hpp"

namespace lexquad {

/// How a vote split evenly by abstentions is resolved.
enum class TieBreak {
    HighestRanked,  // transferred label of the best-ranked non-abstaining neighbor
    PreferEntailment,
    PreferContradiction,
};

std::string_view to_string(TieBreak rule);
TieBreak parse_tie_break(std::string_view token);

struct PipelineConfig {
    Backend backend = Backend::Bm25;
    std::size_t k = 3;
    FieldView view = FieldView::SCH;
    TieBreak tie_break = TieBreak::HighestRanked;
    /// Drop prototypes that share the query's statute before taking the top k.
    bool exclude_same_statute = false;
};

/// Throws UsageError unless k is odd and positive.
void check_config(const PipelineConfig& config);

/// A prototype with its known label.
struct LabeledPair {
    PairText text;
    EntailmentLabel gold = EntailmentLabel::Entailment;
};

std::vector<LabeledPair> labeled_pairs(const Corpus& corpus, Split split);

/// Same label when the pairs are analogous, the opposite one otherwise.
EntailmentLabel transfer_label(EntailmentLabel neighbor_gold, AnalogyLabel verdict);

struct Vote {
    PairRef neighbor;
    std::size_t rank = 0;  // 0-based retrieval rank
    double retrieval_score = 0.0;
    AnalogyLabel verdict = AnalogyLabel::NotAnalogy;
    EntailmentLabel transferred = EntailmentLabel::Entailment;
};

struct EntailmentPrediction {
    PairRef query;
    EntailmentLabel predicted = EntailmentLabel::Entailment;
    /// Non-abstaining neighbors in rank order.
    std::vector<Vote> votes;
    std::size_t abstentions = 0;
    /// Every retrieved neighbor, abstaining or not.
    RetrievalResult neighbors;
    bool tie_broken = false;
};

/// Majority over `votes` (ranked best first). An even split goes to
/// `rule`. Throws DataError when there are no votes at all.
EntailmentLabel decide(std::span<const Vote> votes, TieBreak rule, bool* tie_broken = nullptr);

/// Retrieval over a prototype pool followed by per-neighbor analogy
/// classification, label transfer and a majority vote.
class Pipeline {
public:
    Pipeline(PipelineConfig config, std::vector<LabeledPair> pool, AnalogyClassifier classifier,
             std::shared_ptr<const EmbeddingStore> store = nullptr, Bm25Params bm25 = {},
             TokenizerOptions tokenizer = {});

    const PipelineConfig& config() const noexcept { return config_; }

    /// The query carries texts only; its gold label is never visible here.
    EntailmentPrediction predict(const PairText& query) const;

    /// Quadruples predict() would classify for `query`: (query, neighbor) in
    /// rank order.
    std::vector<QuadRef> quads_for(const PairText& query) const;

private:
    RetrievalResult neighbors_of(const PairText& query) const;

    PipelineConfig config_;
    std::vector<LabeledPair> pool_;
    std::unordered_map<std::string, EntailmentLabel> pool_gold_;
    AnalogyClassifier classifier_;
    std::unique_ptr<Retriever> retriever_;
};

struct RunResult {
    std::vector<EntailmentPrediction> predictions;
    std::vector<EntailmentLabel> golds;
    EvalReport report;
};

/// Predicts every test pair (gold labels stripped before prediction) and
/// scores the predictions.
RunResult run_all(const Pipeline& pipeline, std::span<const LabeledPair> tests);

/// {case_id, predicted, gold, k, backend, view, votes: [...], abstentions}; vote
/// ranks are 1-based.
void write_prediction_dump(const RunResult& run, const PipelineConfig& config, std::ostream& out);

}  // namespace lexquad
