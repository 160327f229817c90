#include "gaitseq/augmentation.hpp"

#include "gaitseq/errors.hpp"

#include <cmath>
#include <string>

namespace gaitseq {

namespace {

void require_length(Eigen::Index num_frames, Eigen::Index seq_len) {
    if (seq_len < 1) throw DataError("sequence length must be at least 1");
    if (num_frames < seq_len) {
        throw DataError("sequence too short: " + std::to_string(num_frames) + " frames, need " +
                        std::to_string(seq_len));
    }
}

} // namespace

CropWindow draw_crop_window(Eigen::Index num_frames, Eigen::Index seq_len, Rng& rng) {
    require_length(num_frames, seq_len);
    std::uniform_int_distribution<Eigen::Index> start(0, num_frames - seq_len);
    return {start(rng), seq_len};
}

CropWindow center_window(Eigen::Index num_frames, Eigen::Index seq_len) {
    require_length(num_frames, seq_len);
    return {(num_frames - seq_len) / 2, seq_len};
}

FrameMatrix random_crop(const KeypointSequence& s, Eigen::Index seq_len, Rng& rng) {
    try {
        const CropWindow w = draw_crop_window(s.num_frames(), seq_len, rng);
        return s.frames.middleRows(w.start, w.length);
    } catch (const DataError& e) {
        throw DataError(s.sequence_id + ": " + e.what());
    }
}

FrameMatrix center_crop(const FrameMatrix& frames, Eigen::Index seq_len) {
    const CropWindow w = center_window(frames.rows(), seq_len);
    return frames.middleRows(w.start, w.length);
}

FrameMatrix center_crop(const KeypointSequence& s, Eigen::Index seq_len) {
    try {
        return center_crop(s.frames, seq_len);
    } catch (const DataError& e) {
        throw DataError(s.sequence_id + ": " + e.what());
    }
}

double head_length(const KeypointSequence& s) {
    const int fx = feature_column(KeypointName::Forehead, Axis::X);
    const int nx = feature_column(KeypointName::Nose, Axis::X);
    const auto& f = s.frames;
    if (f.rows() == 0) return 0.0;
    double total = 0.0;
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
        total += std::hypot(f(r, fx) - f(r, nx), f(r, fx + 1) - f(r, nx + 1));
    }
    return total / static_cast<double>(f.rows());
}

FrameMatrix jitter(const FrameMatrix& m, double sigma, Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("jitter: sigma must be non-negative");
    FrameMatrix out = m;
    if (sigma == 0.0) return out;
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) += noise(rng);
    }
    return out;
}

FeatureStats compute_feature_stats(std::span<const KeypointSequence* const> sequences) {
    FeatureStats stats;
    Eigen::Array<double, 1, kNumFeatures> sum = Eigen::Array<double, 1, kNumFeatures>::Zero();
    double count = 0.0;
    for (const auto* s : sequences) {
        sum += s->frames.colwise().sum().array();
        count += static_cast<double>(s->frames.rows());
    }
    if (count == 0.0) return FeatureStats::identity();
    stats.mean = sum / count;
    Eigen::Array<double, 1, kNumFeatures> sq = Eigen::Array<double, 1, kNumFeatures>::Zero();
    for (const auto* s : sequences) {
        sq += (s->frames.array().rowwise() - stats.mean).square().colwise().sum();
    }
    stats.stddev = (sq / count).sqrt();
    return stats;
}

FeatureStats compute_feature_stats(const FrameMatrix& frames) {
    KeypointSequence s;
    s.frames = frames;
    const KeypointSequence* ptr = &s;
    return compute_feature_stats(std::span<const KeypointSequence* const>(&ptr, 1));
}

FrameMatrix standardize(const FrameMatrix& m, const FeatureStats& stats) {
    const Eigen::Array<double, 1, kNumFeatures> scale = stats.stddev.max(kStdFloor);
    FrameMatrix out = ((m.array().rowwise() - stats.mean).rowwise() / scale).matrix();
    return out;
}

FrameMatrix destandardize(const FrameMatrix& m, const FeatureStats& stats) {
    const Eigen::Array<double, 1, kNumFeatures> scale = stats.stddev.max(kStdFloor);
    FrameMatrix out = ((m.array().rowwise() * scale).rowwise() + stats.mean).matrix();
    return out;
}

} // namespace gaitseq
