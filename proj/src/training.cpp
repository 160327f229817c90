#include "gaitseq/training.hpp"

#include "gaitseq/errors.hpp"
#include "gaitseq/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <random>
#include <stdexcept>
#include <thread>

namespace gaitseq {

using json = nlohmann::json;

void TrainConfig::validate() const {
    arch.validate();
    if (seq_len < 1) throw std::invalid_argument("seq_len must be positive");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be non-negative");
    if (!(clip_threshold > 0.0)) throw std::invalid_argument("clip threshold must be positive");
    if (lr_halve_every < 1) throw std::invalid_argument("lr_halve_every must be positive");
    if (jitter_sigma_fraction < 0.0) throw std::invalid_argument("jitter_sigma_fraction must be non-negative");
    if (folds < 2) throw std::invalid_argument("need at least two folds");
}

json to_json(const TrainConfig& c) {
    return {{"seq_len", c.seq_len},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"arch", c.arch.shape_string()},
            {"fcn_activation", std::string(to_string(c.arch.fcn_activation))},
            {"lr", c.lr},
            {"weight_decay", c.weight_decay},
            {"dropout", c.arch.dropout_rate},
            {"clip_threshold", c.clip_threshold},
            {"lr_halve_every", c.lr_halve_every},
            {"jitter_sigma_fraction", c.jitter_sigma_fraction},
            {"standardize", c.standardize},
            {"folds", c.folds},
            {"seed", c.seed},
            {"track_train_accuracy", c.track_train_accuracy}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    auto read = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    if (j.contains("arch")) c.arch = ModelArchitecture::parse(j.at("arch").get<std::string>());
    if (j.contains("fcn_activation")) {
        auto act = parse_fcn_activation(j.at("fcn_activation").get<std::string>());
        if (!act) throw std::invalid_argument("unknown fcn_activation");
        c.arch.fcn_activation = *act;
    }
    read("dropout", c.arch.dropout_rate);
    read("seq_len", c.seq_len);
    read("batch_size", c.batch_size);
    read("epochs", c.epochs);
    read("lr", c.lr);
    read("weight_decay", c.weight_decay);
    read("clip_threshold", c.clip_threshold);
    read("lr_halve_every", c.lr_halve_every);
    read("jitter_sigma_fraction", c.jitter_sigma_fraction);
    read("standardize", c.standardize);
    read("folds", c.folds);
    read("seed", c.seed);
    read("track_train_accuracy", c.track_train_accuracy);
    c.validate();
    return c;
}

std::string config_hash(const TrainConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash_string(to_json(config).dump())));
    return buf;
}

std::vector<std::size_t> FoldAssignment::train_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < sequence_fold.size(); ++i) {
        if (sequence_fold[i] != fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldAssignment::validation_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < sequence_fold.size(); ++i) {
        if (sequence_fold[i] == fold) out.push_back(i);
    }
    return out;
}

FoldAssignment grouped_stratified_kfold(const Dataset& d, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("need at least two folds");
    struct Cow {
        std::string id;
        std::vector<std::size_t> members;
        long long counts[2] = {0, 0};
        std::uint64_t tie = 0;
    };
    std::vector<Cow> cows;
    std::map<std::string, std::size_t> index;
    long long totals[2] = {0, 0};
    for (std::size_t i = 0; i < d.sequences.size(); ++i) {
        const auto& s = d.sequences[i];
        auto [it, inserted] = index.emplace(s.cow_id, cows.size());
        if (inserted) cows.push_back(Cow{s.cow_id, {}, {0, 0}, derive_seed(seed, {hash_string(s.cow_id)})});
        Cow& cow = cows[it->second];
        cow.members.push_back(i);
        ++cow.counts[static_cast<int>(s.label)];
        ++totals[static_cast<int>(s.label)];
    }
    if (cows.size() < static_cast<std::size_t>(k)) {
        throw DataError("grouped k-fold: " + std::to_string(cows.size()) + " cows is fewer than " + std::to_string(k) +
                        " folds");
    }

    auto majority = [](const Cow& c) { return c.counts[1] > c.counts[0] ? 1 : 0; };
    std::sort(cows.begin(), cows.end(), [&](const Cow& a, const Cow& b) {
        if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
        if (majority(a) != majority(b)) return majority(a) < majority(b);
        if (a.tie != b.tie) return a.tie < b.tie;
        return a.id < b.id;
    });

    // Costs are scaled by k so that per-fold targets N_c / k become integers.
    const long long kk = k;
    std::vector<std::array<long long, 2>> fold_counts(static_cast<std::size_t>(k), {0, 0});
    FoldAssignment out;
    out.k = k;
    out.validation_ids.resize(static_cast<std::size_t>(k));
    out.sequence_fold.assign(d.sequences.size(), -1);
    for (const Cow& cow : cows) {
        int best = 0;
        long long best_delta = 0;
        long long best_size = 0;
        for (int f = 0; f < k; ++f) {
            const auto& fc = fold_counts[static_cast<std::size_t>(f)];
            long long delta = 0;
            for (int c = 0; c < 2; ++c) {
                const long long a = cow.counts[c];
                delta += kk * a * (2 * kk * fc[c] + kk * a - 2 * totals[c]);
            }
            const long long size = fc[0] + fc[1];
            if (f == 0 || delta < best_delta || (delta == best_delta && size < best_size)) {
                best = f;
                best_delta = delta;
                best_size = size;
            }
        }
        fold_counts[static_cast<std::size_t>(best)][0] += cow.counts[0];
        fold_counts[static_cast<std::size_t>(best)][1] += cow.counts[1];
        out.cow_fold[cow.id] = best;
        for (std::size_t i : cow.members) out.sequence_fold[i] = best;
    }
    for (std::size_t i = 0; i < d.sequences.size(); ++i) {
        out.validation_ids[static_cast<std::size_t>(out.sequence_fold[i])].push_back(d.sequences[i].sequence_id);
    }
    return out;
}

std::vector<double> sample_weights(std::span<const Label> labels) {
    std::size_t counts[2] = {0, 0};
    for (Label l : labels) ++counts[static_cast<int>(l)];
    if (counts[0] == 0 || counts[1] == 0) throw DataError("sample_weights: training split contains a single class");
    std::vector<double> w;
    w.reserve(labels.size());
    for (Label l : labels) w.push_back(1.0 / static_cast<double>(counts[static_cast<int>(l)]));
    return w;
}

WeightedSampler::WeightedSampler(std::span<const Label> labels) {
    const std::vector<double> w = sample_weights(labels);
    dist_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
}

LossAndGrad bce_with_logits(double logit, double target) noexcept {
    LossAndGrad out;
    out.loss = std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
    out.dlogit = sigmoid(logit) - target;
    return out;
}

FrameMatrix InputPipeline::evaluation_input(const KeypointSequence& s) const {
    FrameMatrix m = center_crop(s, seq_len);
    return standardize_inputs ? standardize(m, stats) : m;
}

std::vector<PredictionRecord> predict_sequences(const ModelParams<float>& params, const InputPipeline& pipeline,
                                                const Dataset& d, std::span<const std::size_t> indices) {
    constexpr std::size_t kChunk = 32;
    std::vector<PredictionRecord> out;
    out.reserve(indices.size());
    for (std::size_t start = 0; start < indices.size(); start += kChunk) {
        const std::size_t n = std::min(kChunk, indices.size() - start);
        std::vector<FrameMatrix> inputs;
        inputs.reserve(n);
        for (std::size_t j = 0; j < n; ++j) inputs.push_back(pipeline.evaluation_input(d.sequences[indices[start + j]]));
        const auto tape = model_forward(params, SequenceBatch<float>::pack(inputs), Mode::Eval);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& s = d.sequences[indices[start + j]];
            const Prediction p = predict(static_cast<double>(tape.logits(static_cast<Eigen::Index>(j))));
            out.push_back({s.sequence_id, s.label, p.label, p.probability});
        }
    }
    return out;
}

namespace {

double accuracy_of(std::span<const PredictionRecord> preds) {
    if (preds.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t ok = 0;
    for (const auto& p : preds) ok += p.predicted_label == p.true_label ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(preds.size());
}

} // namespace

TrainResult train_model(const Dataset& d, std::span<const std::size_t> train_idx,
                        std::span<const std::size_t> val_idx, const TrainConfig& config, std::uint64_t seed) {
    config.validate();
    if (train_idx.empty()) throw DataError("train_model: empty training split");

    std::vector<const KeypointSequence*> train;
    std::vector<Label> labels;
    std::vector<double> sigma;
    for (std::size_t i : train_idx) {
        const auto& s = d.sequences.at(i);
        if (s.num_frames() < config.seq_len) {
            throw DataError(s.sequence_id + ": sequence too short (" + std::to_string(s.num_frames()) +
                            " frames, seq_len " + std::to_string(config.seq_len) + ")");
        }
        train.push_back(&s);
        labels.push_back(s.label);
        sigma.push_back(config.jitter_sigma_fraction * head_length(s));
    }
    WeightedSampler sampler(labels);

    InputPipeline pipeline;
    pipeline.seq_len = config.seq_len;
    pipeline.standardize_inputs = config.standardize;
    pipeline.stats = config.standardize ? compute_feature_stats(train) : FeatureStats::identity();

    Rng rng(seed);
    TrainResult result{init_params<float>(config.arch, rng), pipeline.stats, {}, {}, {}, seed};
    ModelParams<float>& params = result.params;
    AdamWAmsgrad<float> optimizer(params.size(), AdamWConfig{.weight_decay = config.weight_decay},
                                  params.layout().decay_mask());

    const std::size_t n = train.size();
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    const std::size_t steps = (n + batch - 1) / batch;
    std::vector<FrameMatrix> crops;
    std::vector<float> dlogits;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = scheduled_lr(config.lr, epoch, config.lr_halve_every);
        double loss_sum = 0.0;
        for (std::size_t step = 0; step < steps; ++step) {
            const std::size_t bs = std::min(batch, n - step * batch);
            crops.clear();
            std::vector<double> targets;
            for (std::size_t b = 0; b < bs; ++b) {
                const std::size_t pick = sampler(rng);
                FrameMatrix m = random_crop(*train[pick], config.seq_len, rng);
                if (sigma[pick] > 0.0) m = jitter(m, sigma[pick], rng);
                if (config.standardize) m = standardize(m, pipeline.stats);
                crops.push_back(std::move(m));
                targets.push_back(train[pick]->label == Label::Lame ? 1.0 : 0.0);
            }
            const std::string where = "epoch " + std::to_string(epoch) + ", step " + std::to_string(step);
            try {
                const auto tape = model_forward(params, SequenceBatch<float>::pack(crops), Mode::Train, &rng);
                dlogits.assign(bs, 0.0f);
                double batch_loss = 0.0;
                for (std::size_t b = 0; b < bs; ++b) {
                    const auto lg = bce_with_logits(static_cast<double>(tape.logits(static_cast<Eigen::Index>(b))),
                                                    targets[b]);
                    batch_loss += lg.loss;
                    dlogits[b] = static_cast<float>(lg.dlogit / static_cast<double>(bs));
                }
                if (!std::isfinite(batch_loss)) throw NumericalDivergence("numerical divergence: non-finite loss");
                loss_sum += batch_loss;
                auto grads = model_backward(params, tape, std::span<const float>(dlogits));
                clip_gradients(grads.values(), config.clip_threshold);
                optimizer.step(params.values(), grads.values(), lr);
            } catch (const NumericalDivergence& e) {
                throw NumericalDivergence(std::string(e.what()) + " (" + where + ")");
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        if (!val_idx.empty()) {
            result.val_predictions = predict_sequences(params, pipeline, d, val_idx);
            const MetricSet m = metrics(confusion(result.val_predictions));
            rec.val_accuracy = m.accuracy;
            rec.val_f1 = m.macro_f1;
        }
        if (config.track_train_accuracy) {
            rec.train_accuracy = accuracy_of(predict_sequences(params, pipeline, d, train_idx));
        }
        result.history.push_back(rec);
    }
    if (!val_idx.empty()) {
        if (config.epochs == 0) result.val_predictions = predict_sequences(params, pipeline, d, val_idx);
        result.val_metrics = metrics(confusion(result.val_predictions));
    }
    return result;
}

std::uint64_t task_seed(std::uint64_t seed, int fold, int grid_index) {
    return derive_seed(seed, {0x7472u, static_cast<std::uint64_t>(fold), static_cast<std::uint64_t>(grid_index)});
}

TrainResult train_fold(const Dataset& d, const FoldAssignment& folds, int fold, const TrainConfig& config,
                       int grid_index) {
    if (fold < 0 || fold >= folds.k || folds.sequence_fold.size() != d.sequences.size()) {
        throw std::invalid_argument("train_fold: fold assignment does not match dataset");
    }
    const auto train = folds.train_indices(fold);
    const auto val = folds.validation_indices(fold);
    return train_model(d, train, val, config, task_seed(config.seed, fold, grid_index));
}

std::vector<HyperGrid::Point> HyperGrid::points() const {
    if (lr.empty() || weight_decay.empty() || dropout.empty()) throw std::invalid_argument("empty hyperparameter grid");
    std::vector<Point> out;
    for (double a : lr) {
        for (double w : weight_decay) {
            for (double p : dropout) out.push_back({a, w, p});
        }
    }
    return out;
}

void run_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

namespace {

TrainConfig with_point(TrainConfig c, const HyperGrid::Point& p) {
    c.lr = p.lr;
    c.weight_decay = p.weight_decay;
    c.arch.dropout_rate = p.dropout;
    return c;
}

std::vector<TrainResult> train_all_folds(const Dataset& d, const FoldAssignment& a, const TrainConfig& config,
                                         int grid_index, int jobs) {
    std::vector<std::optional<TrainResult>> slots(static_cast<std::size_t>(a.k));
    run_parallel(slots.size(), jobs, [&](std::size_t f) {
        slots[f] = train_fold(d, a, static_cast<int>(f), config, grid_index);
    });
    std::vector<TrainResult> out;
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace

CrossValResult cross_validate(const Dataset& d, const TrainConfig& config, int jobs) {
    config.validate();
    CrossValResult r;
    r.config = config;
    r.assignment = grouped_stratified_kfold(d, config.folds, config.seed);
    r.folds = train_all_folds(d, r.assignment, config, 0, jobs);
    return r;
}

CrossValResult grid_search(const Dataset& d, const TrainConfig& base, const HyperGrid& grid, int jobs) {
    base.validate();
    const auto points = grid.points();
    CrossValResult r;
    r.assignment = grouped_stratified_kfold(d, base.folds, base.seed);
    const std::size_t k = static_cast<std::size_t>(r.assignment.k);

    std::vector<double> f1(points.size() * k, 0.0);
    std::vector<std::string> failure(points.size() * k);
    run_parallel(points.size() * k, jobs, [&](std::size_t task) {
        const std::size_t p = task / k;
        const int fold = static_cast<int>(task % k);
        try {
            const TrainResult res = train_fold(d, r.assignment, fold, with_point(base, points[p]), static_cast<int>(p));
            f1[task] = res.val_metrics.macro_f1;
        } catch (const NumericalDivergence& e) {
            failure[task] = "fold " + std::to_string(fold) + ": " + e.what();
        }
    });

    for (std::size_t p = 0; p < points.size(); ++p) {
        GridPointScore score;
        score.point = points[p];
        double sum = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            if (!failure[p * k + f].empty() && score.failure.empty()) score.failure = failure[p * k + f];
            sum += f1[p * k + f];
        }
        if (score.failure.empty()) score.mean_f1 = sum / static_cast<double>(k);
        r.grid.push_back(score);
    }

    auto better = [](const GridPointScore& a, const GridPointScore& b) {
        if (a.mean_f1 != b.mean_f1) return a.mean_f1 > b.mean_f1;
        if (a.point.lr != b.point.lr) return a.point.lr < b.point.lr;
        if (a.point.weight_decay != b.point.weight_decay) return a.point.weight_decay < b.point.weight_decay;
        return a.point.dropout < b.point.dropout;
    };
    int best = 0;
    for (std::size_t p = 1; p < r.grid.size(); ++p) {
        if (better(r.grid[p], r.grid[static_cast<std::size_t>(best)])) best = static_cast<int>(p);
    }
    if (std::isinf(r.grid[static_cast<std::size_t>(best)].mean_f1)) {
        throw NumericalDivergence("every grid point diverged; first failure: " + r.grid.front().failure);
    }
    r.selected = best;
    r.config = with_point(base, points[static_cast<std::size_t>(best)]);
    r.folds = train_all_folds(d, r.assignment, r.config, best, jobs);
    return r;
}

namespace {

json metrics_json(const MetricSet& m) {
    return {{"accuracy", m.accuracy},
            {"macro_f1", m.macro_f1},
            {"sensitivity", m.sensitivity},
            {"specificity", m.specificity}};
}

json percent_json(const MetricSet& m) {
    return {{"accuracy", format_percent(m.accuracy)},
            {"macro_f1", format_percent(m.macro_f1)},
            {"sensitivity", format_percent(m.sensitivity)},
            {"specificity", format_percent(m.specificity)}};
}

} // namespace

json make_report(const CrossValResult& r) {
    json report;
    report["config"] = to_json(r.config);
    report["config_hash"] = config_hash(r.config);
    json folds = json::array();
    std::vector<MetricSet> sets;
    bool degenerate = false;
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
        const auto& res = r.folds[f];
        const ConfusionMatrix cm = confusion(res.val_predictions);
        const MetricSet m = metrics(cm);
        degenerate = degenerate || m.degenerate;
        sets.push_back(m);
        folds.push_back({{"fold", f},
                         {"num_validation", cm.total()},
                         {"confusion", {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}}},
                         {"metrics", metrics_json(m)},
                         {"degenerate", m.degenerate}});
    }
    report["folds"] = folds;
    if (!sets.empty()) {
        const MetricSummary s = aggregate_folds(sets);
        report["aggregate"] = {{"mean", metrics_json(s.mean)},
                               {"std", metrics_json(s.stddev)},
                               {"mean_percent", percent_json(s.mean)},
                               {"std_percent", percent_json(s.stddev)}};
    }
    if (degenerate) report["warnings"] = json::array({"some fold metric had a 0/0 ratio, reported as 0"});
    if (!r.grid.empty()) {
        json grid = json::array();
        for (const auto& g : r.grid) {
            json entry = {{"lr", g.point.lr}, {"weight_decay", g.point.weight_decay}, {"dropout", g.point.dropout}};
            entry["mean_val_f1"] = std::isinf(g.mean_f1) ? json(nullptr) : json(g.mean_f1);
            if (!g.failure.empty()) entry["failure"] = g.failure;
            grid.push_back(entry);
        }
        report["grid"] = grid;
        report["selected"] = r.selected;
    }
    return report;
}

std::string format_history_csv(std::span<const EpochRecord> history) {
    std::string out = "epoch,train_loss,val_accuracy,val_f1\n";
    for (const auto& e : history) {
        out += std::to_string(e.epoch) + ',' + format_double(e.train_loss) + ',' + format_double(e.val_accuracy) +
               ',' + format_double(e.val_f1) + '\n';
    }
    return out;
}

} // namespace gaitseq
