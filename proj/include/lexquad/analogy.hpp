#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "lexquad/embed_store.hpp"
#include "lexquad/quadgen.hpp"

namespace lexquad {

enum class ScoreMethod { QuadrupleOffset, PairConcat, External };

/// "offset" / "pair" / "external"
std::string_view to_string(ScoreMethod method);
ScoreMethod parse_score_method(std::string_view token);

/// Closed interval of values a method can produce: [-1, 1] for the cosine
/// methods, [0, 1] for external labels.
std::pair<double, double> score_range(ScoreMethod method);

struct AnalogyScore {
    std::string quad_id;
    ScoreMethod method = ScoreMethod::QuadrupleOffset;
    double value = 0.0;
};

/// cosine(f(S1) - f(C1), f(S2) - f(C2)). `case_view` picks which case
/// embedding stands for C.
AnalogyScore score_quadruple_offset(const EmbeddingStore& store, const QuadRef& quad,
                                    FieldView case_view = FieldView::CH);

/// cosine(f(S1+C1), f(S2+C2)) from the pair:<sid>:<cid>:concat rows.
AnalogyScore score_pair_concat(const EmbeddingStore& store, const QuadRef& quad);

struct LabeledScore {
    double value = 0.0;
    AnalogyLabel gold = AnalogyLabel::NotAnalogy;
};

struct ThresholdModel {
    ScoreMethod method = ScoreMethod::QuadrupleOffset;
    double threshold = 0.0;
    double dev_accuracy = 0.0;
    FieldView case_view = FieldView::CH;
};

/// Picks the threshold maximising accuracy under `value > threshold =>
/// Analogy`. Candidates are the midpoints between consecutive distinct
/// scores plus one sentinel below the minimum and one above the maximum,
/// both kept inside the method's score range. The smallest optimal
/// candidate wins. Throws DataError unless both labels are present.
ThresholdModel calibrate_threshold(std::span<const LabeledScore> scores, ScoreMethod method);

/// Fraction of `scores` classified correctly by `threshold`.
double threshold_accuracy(std::span<const LabeledScore> scores, double threshold);

void write_threshold_model(const ThresholdModel& model, std::ostream& out);
ThresholdModel read_threshold_model(const std::filesystem::path& path);

/// quad_id -> label; nullopt marks an abstention (an LLM reply with no
/// usable verdict).
class ExternalPredictions {
public:
    using Map = std::unordered_map<std::string, std::optional<AnalogyLabel>>;

    ExternalPredictions() = default;
    explicit ExternalPredictions(Map labels) : labels_(std::move(labels)) {}

    std::size_t size() const noexcept { return labels_.size(); }
    const Map& labels() const noexcept { return labels_; }

    /// Looks up the quad's own id, then the id of the swapped quad. Throws
    /// MissingKeyError when neither is present.
    std::optional<AnalogyLabel> lookup(const QuadRef& quad) const;

private:
    Map labels_;
};

struct OffsetThreshold {
    std::shared_ptr<const EmbeddingStore> store;
    ThresholdModel model;
};

struct PairThreshold {
    std::shared_ptr<const EmbeddingStore> store;
    ThresholdModel model;
};

using AnalogyClassifier = std::variant<OffsetThreshold, PairThreshold, ExternalPredictions>;

class AbstentionError : public DataError {
public:
    using DataError::DataError;
};

/// Threshold classifiers return Analogy iff score > threshold; external
/// predictions are returned verbatim, nullopt for an abstention.
std::optional<AnalogyLabel> classify_or_abstain(const AnalogyClassifier& classifier, const QuadRef& quad);

/// Same as classify_or_abstain but an abstention raises AbstentionError.
AnalogyLabel classify(const AnalogyClassifier& classifier, const QuadRef& quad);

/// Line-delimited {quad_id, label: 0|1|null}. Duplicates and labels other
/// than 0, 1 or null are errors.
ExternalPredictions import_external_predictions(std::istream& in);
ExternalPredictions import_external_predictions(const std::filesystem::path& path);

struct PredictionRow {
    std::string quad_id;
    std::optional<AnalogyLabel> label;
};
void write_predictions(std::span<const PredictionRow> rows, std::ostream& out);

/// {quad_id, method, value}
void write_scores(std::span<const AnalogyScore> scores, std::ostream& out);
std::vector<AnalogyScore> read_scores(const std::filesystem::path& path);

}  // namespace lexquad
