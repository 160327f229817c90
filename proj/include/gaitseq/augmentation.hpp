#pragma once

#include "gaitseq/dataset.hpp"
#include "gaitseq/rng.hpp"

#include <Eigen/Core>

#include <span>

namespace gaitseq {

struct CropWindow {
    Eigen::Index start = 0;
    Eigen::Index length = 0;
};

/// Window start drawn uniformly from {0, ..., F - T}. Throws DataError if F < T.
CropWindow draw_crop_window(Eigen::Index num_frames, Eigen::Index seq_len, Rng& rng);
/// Window starting at floor((F - T) / 2).
CropWindow center_window(Eigen::Index num_frames, Eigen::Index seq_len);

FrameMatrix random_crop(const KeypointSequence& s, Eigen::Index seq_len, Rng& rng);
FrameMatrix center_crop(const KeypointSequence& s, Eigen::Index seq_len);
FrameMatrix center_crop(const FrameMatrix& frames, Eigen::Index seq_len);

/// Mean forehead-to-nose distance over all frames, in pixels.
double head_length(const KeypointSequence& s);

/// Replaces each coordinate with a draw from Normal(value, sigma).
FrameMatrix jitter(const FrameMatrix& m, double sigma, Rng& rng);

struct JitterSpec {
    double sigma_fraction = 0.01;
    [[nodiscard]] double sigma_for(double head_length_px) const noexcept { return sigma_fraction * head_length_px; }
};

inline constexpr double kStdFloor = 1e-8;

struct FeatureStats {
    Eigen::Array<double, 1, kNumFeatures> mean = Eigen::Array<double, 1, kNumFeatures>::Zero();
    Eigen::Array<double, 1, kNumFeatures> stddev = Eigen::Array<double, 1, kNumFeatures>::Ones();

    /// mean 0 / std 1, i.e. standardize is the identity.
    static FeatureStats identity() { return {}; }
};

/// Per-column mean and population standard deviation over every frame of `sequences`.
FeatureStats compute_feature_stats(std::span<const KeypointSequence* const> sequences);
FeatureStats compute_feature_stats(const FrameMatrix& frames);

FrameMatrix standardize(const FrameMatrix& m, const FeatureStats& stats);
FrameMatrix destandardize(const FrameMatrix& m, const FeatureStats& stats);

} // namespace gaitseq
