#pragma once

#include "gaitseq/dataset.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gaitseq {

/// Counts with Lame as the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    [[nodiscard]] std::size_t total() const noexcept { return tp + fp + tn + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricSet {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    /// Set when some ratio was 0/0 and defined as 0.
    bool degenerate = false;
};

struct PredictionRecord {
    std::string sequence_id;
    Label true_label = Label::Normal;
    Label predicted_label = Label::Normal;
    double score = 0.5;
};

/// Throws DataError on an empty list or a duplicate sequence id.
ConfusionMatrix confusion(std::span<const PredictionRecord> preds);
MetricSet metrics(const ConfusionMatrix& cm);

struct McNemarResult {
    std::size_t b = 0;  // A correct, B wrong
    std::size_t c = 0;  // A wrong, B correct
    double p_value = 1.0;

    [[nodiscard]] bool significant(double alpha = 0.05) const noexcept { return p_value < alpha; }
};

/// Exact two-sided binomial p-value: min(1, 2 * P[X <= min(b, c)]), X ~ Bin(b + c, 1/2).
double mcnemar_exact_p(std::size_t b, std::size_t c);
/// Pairs records by sequence id; throws DataError if id sets or true labels differ.
McNemarResult mcnemar_exact(std::span<const PredictionRecord> a, std::span<const PredictionRecord> b);

struct MetricSummary {
    MetricSet mean;
    MetricSet stddev;
};

/// Unweighted mean and population standard deviation across folds.
MetricSummary aggregate_folds(std::span<const MetricSet> folds);

/// `sequence_id,true_label,pred_label,score`
void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionRecord> preds);
std::vector<PredictionRecord> read_predictions_csv(const std::filesystem::path& path);

/// Percentage with two decimals, e.g. 0.8447 -> "84.47".
std::string format_percent(double fraction);

} // namespace gaitseq
