#pragma once

#include "gaitseq/augmentation.hpp"
#include "gaitseq/dataset.hpp"
#include "gaitseq/evaluation.hpp"
#include "gaitseq/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gaitseq {

struct TrainConfig {
    int seq_len = 90;
    int batch_size = 8;
    int epochs = 100;
    /// Dropout lives in arch.dropout_rate.
    ModelArchitecture arch;
    double lr = 1e-3;
    double weight_decay = 1e-2;
    double clip_threshold = 0.5;
    int lr_halve_every = 50;
    double jitter_sigma_fraction = 0.01;
    bool standardize = true;
    int folds = 5;
    std::uint64_t seed = 0;
    /// Also record accuracy on center-cropped training sequences each epoch.
    bool track_train_accuracy = false;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const TrainConfig& config);

struct FoldAssignment {
    int k = 0;
    /// Validation sequence ids per fold, in dataset order.
    std::vector<std::vector<std::string>> validation_ids;
    std::map<std::string, int> cow_fold;
    /// Fold of each dataset sequence, index-aligned with Dataset::sequences.
    std::vector<int> sequence_fold;

    [[nodiscard]] std::vector<std::size_t> train_indices(int fold) const;
    [[nodiscard]] std::vector<std::size_t> validation_indices(int fold) const;
};

/// Greedy grouped stratified assignment. Cows are ordered by sequence count
/// (descending), then majority label, then a seeded hash of the cow id; each is
/// placed in the fold minimising the sum over folds and classes of the squared
/// deviation of the class count from its per-fold target; ties go to the
/// smaller fold, then the lower fold index. Throws DataError when there are fewer cows than folds.
FoldAssignment grouped_stratified_kfold(const Dataset& d, int k, std::uint64_t seed);

/// 1 / (size of the sequence's class). Throws DataError if a class is absent.
std::vector<double> sample_weights(std::span<const Label> labels);

/// Draws training indices with replacement, proportional to sample_weights.
class WeightedSampler {
public:
    explicit WeightedSampler(std::span<const Label> labels);
    std::size_t operator()(Rng& rng) { return dist_(rng); }

private:
    std::discrete_distribution<std::size_t> dist_;
};

struct LossAndGrad {
    double loss = 0.0;
    double dlogit = 0.0;
};

/// Stable binary cross-entropy on a logit; dlogit = sigmoid(logit) - target.
LossAndGrad bce_with_logits(double logit, double target) noexcept;

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = std::numeric_limits<double>::quiet_NaN();
    double val_f1 = std::numeric_limits<double>::quiet_NaN();
    double train_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    ModelParams<float> params;
    FeatureStats stats;
    std::vector<EpochRecord> history;
    std::vector<PredictionRecord> val_predictions;
    MetricSet val_metrics;
    std::uint64_t seed = 0;
};

/// Preprocessing shared by training and inference for a fitted model.
struct InputPipeline {
    int seq_len = 90;
    bool standardize_inputs = true;
    FeatureStats stats;

    [[nodiscard]] FrameMatrix evaluation_input(const KeypointSequence& s) const;
};

/// Center-cropped, standardized predictions for `indices` in eval mode.
std::vector<PredictionRecord> predict_sequences(const ModelParams<float>& params, const InputPipeline& pipeline,
                                                const Dataset& d, std::span<const std::size_t> indices);

/// Trains on `train_idx` and scores `val_idx` (which may be empty) after each
/// epoch. Throws NumericalDivergence naming the epoch and step of a
/// non-finite loss.
TrainResult train_model(const Dataset& d, std::span<const std::size_t> train_idx,
                        std::span<const std::size_t> val_idx, const TrainConfig& config, std::uint64_t seed);

/// Seed for one (fold, grid point) task, independent of execution order.
std::uint64_t task_seed(std::uint64_t seed, int fold, int grid_index);

TrainResult train_fold(const Dataset& d, const FoldAssignment& folds, int fold, const TrainConfig& config,
                       int grid_index = 0);

struct HyperGrid {
    std::vector<double> lr = {1e-3, 3e-4, 1e-4};
    std::vector<double> weight_decay = {1e-2, 1e-4};
    std::vector<double> dropout = {0.0, 0.25, 0.5};

    struct Point {
        double lr;
        double weight_decay;
        double dropout;
    };
    /// Cartesian product, lr outermost.
    [[nodiscard]] std::vector<Point> points() const;
};

struct GridPointScore {
    HyperGrid::Point point{};
    /// Mean validation macro-F1, or -infinity if any fold diverged.
    double mean_f1 = -std::numeric_limits<double>::infinity();
    std::string failure;
};

struct CrossValResult {
    TrainConfig config;
    FoldAssignment assignment;
    std::vector<TrainResult> folds;
    std::vector<GridPointScore> grid;
    int selected = -1;
};

/// Runs `count` independent tasks on up to `jobs` threads; rethrows the
/// first failing task's exception (by index) after all tasks finish.
void run_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

/// Trains every fold with one configuration.
CrossValResult cross_validate(const Dataset& d, const TrainConfig& config, int jobs = 1);

/// Flat cross-validation: scores every grid point by mean validation macro-F1
/// over the folds, selects the best (ties to lower lr, then weight decay, then
/// dropout) and retrains all folds with it.
CrossValResult grid_search(const Dataset& d, const TrainConfig& base, const HyperGrid& grid, int jobs = 1);

/// Report JSON: config, config hash, per-fold metrics, aggregate, grid scores.
nlohmann::json make_report(const CrossValResult& result);

/// history.csv body: `epoch,train_loss,val_accuracy,val_f1`.
std::string format_history_csv(std::span<const EpochRecord> history);

} // namespace gaitseq
