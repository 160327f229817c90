#include "gaitseq/augmentation.hpp"
#include "gaitseq/errors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace gaitseq {
namespace {

using testing::indexed_sequence;
using testing::random_sequence;

TEST(RandomCrop, SingleAdmissibleWindowStartsAtZero) {
    const auto s = indexed_sequence(90);
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const FrameMatrix m = random_crop(s, 90, rng);
        EXPECT_EQ(m, s.frames);
    }
}

TEST(RandomCrop, TooShortIsAnError) {
    const auto s = indexed_sequence(59);
    Rng rng(1);
    EXPECT_THROW(random_crop(s, 60, rng), DataError);
    EXPECT_THROW(center_crop(s, 60), DataError);
}

TEST(RandomCrop, OutputIsContiguousExactSubmatrix) {
    const auto s = random_sequence("r", "c", Label::Normal, 150, 3);
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const FrameMatrix m = random_crop(s, 60, rng);
        ASSERT_EQ(m.rows(), 60);
        bool found = false;
        for (Eigen::Index start = 0; start + 60 <= s.num_frames() && !found; ++start) {
            found = s.frames.middleRows(start, 60) == m;
        }
        EXPECT_TRUE(found);
    }
}

TEST(RandomCrop, StartIsUniformOverAdmissibleRange) {
    // F = 150, T = 60: 91 admissible starts. Every bin frequency must be within
    // 5 standard errors of 1/91.
    const Eigen::Index frames = 150;
    const Eigen::Index len = 60;
    const int bins = 91;
    const int draws = 50000;
    Rng rng(7);
    std::vector<int> counts(bins, 0);
    for (int i = 0; i < draws; ++i) {
        const CropWindow w = draw_crop_window(frames, len, rng);
        ASSERT_GE(w.start, 0);
        ASSERT_LE(w.start + len, frames);
        ++counts[static_cast<std::size_t>(w.start)];
    }
    const double p = 1.0 / bins;
    const double se = std::sqrt(p * (1.0 - p) / draws);
    for (int b = 0; b < bins; ++b) {
        EXPECT_LT(std::abs(counts[static_cast<std::size_t>(b)] / static_cast<double>(draws) - p), 5.0 * se) << b;
    }
}

TEST(CenterCrop, FloorRule) {
    const auto s = indexed_sequence(134);
    const FrameMatrix m = center_crop(s, 90);
    EXPECT_EQ(m(0, 0), 22.0);
    EXPECT_EQ(m(89, 0), 111.0);

    const auto odd = indexed_sequence(91);
    EXPECT_EQ(center_crop(odd, 90)(0, 0), 0.0);

    const auto exact = indexed_sequence(90);
    EXPECT_EQ(center_crop(exact, 90), exact.frames);
}

TEST(CenterCrop, Idempotent) {
    const auto s = random_sequence("c", "c", Label::Lame, 173, 5);
    const FrameMatrix once = center_crop(s, 60);
    EXPECT_EQ(center_crop(once, 60), once);
}

TEST(HeadLength, MeanForeheadToNoseDistance) {
    KeypointSequence s;
    s.frames = FrameMatrix::Zero(2, kNumFeatures);
    const int fx = feature_column(KeypointName::Forehead, Axis::X);
    s.frames(0, fx) = 10.0;
    EXPECT_DOUBLE_EQ(head_length(s), 0.5 * (10.0 + 0.0));
    s.frames(1, fx) = 10.0;
    EXPECT_DOUBLE_EQ(head_length(s), 10.0);
    s.frames(1, fx) = 20.0;
    EXPECT_DOUBLE_EQ(head_length(s), 15.0);

    KeypointSequence same;
    same.frames = FrameMatrix::Constant(5, kNumFeatures, 3.0);
    EXPECT_DOUBLE_EQ(head_length(same), 0.0);
}

TEST(Jitter, ZeroSigmaIsIdentity) {
    const auto s = random_sequence("j", "c", Label::Normal, 30, 8);
    Rng rng(3);
    EXPECT_EQ(jitter(s.frames, 0.0, rng), s.frames);
    EXPECT_THROW(jitter(s.frames, -1.0, rng), std::invalid_argument);
}

TEST(Jitter, SigmaIsOnePercentOfHeadLength) {
    const JitterSpec spec;
    EXPECT_DOUBLE_EQ(spec.sigma_for(50.0), 0.5);
}

TEST(Jitter, UnbiasedWithRequestedSpread) {
    const FrameMatrix base = FrameMatrix::Constant(2, kNumFeatures, 100.0);
    const double sigma = 0.5;
    const int copies = 100000;
    Rng rng(4);
    Eigen::ArrayXXd sum = Eigen::ArrayXXd::Zero(2, kNumFeatures);
    Eigen::ArrayXXd sq = Eigen::ArrayXXd::Zero(2, kNumFeatures);
    for (int i = 0; i < copies; ++i) {
        const FrameMatrix j = jitter(base, sigma, rng);
        ASSERT_EQ(j.rows(), 2);
        ASSERT_EQ(j.cols(), kNumFeatures);
        sum += (j - base).array();
        sq += (j - base).array().square();
    }
    const Eigen::ArrayXXd mean = sum / copies;
    const double bound = 4.0 * sigma / std::sqrt(static_cast<double>(copies));
    EXPECT_LT(mean.abs().maxCoeff(), bound);
    const Eigen::ArrayXXd sd = (sq / copies).sqrt();
    EXPECT_NEAR(sd.mean(), sigma, 0.01);
}

TEST(Standardize, DirectFormulaAndGuards) {
    FrameMatrix m = FrameMatrix::Zero(2, kNumFeatures);
    m(0, 0) = 0.0;
    m(1, 0) = 2.0;
    m.col(1).setConstant(7.0);
    const FeatureStats stats = compute_feature_stats(m);
    EXPECT_DOUBLE_EQ(stats.mean(0), 1.0);
    EXPECT_DOUBLE_EQ(stats.stddev(0), 1.0);
    const FrameMatrix z = standardize(m, stats);
    EXPECT_DOUBLE_EQ(z(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(z(1, 0), 1.0);
    EXPECT_EQ(z.col(1), Eigen::VectorXd::Zero(2));
}

TEST(Standardize, SelfStatsGiveZeroMeanUnitStd) {
    const auto s = random_sequence("z", "c", Label::Normal, 200, 12);
    const FeatureStats stats = compute_feature_stats(s.frames);
    const FrameMatrix z = standardize(s.frames, stats);
    const FeatureStats after = compute_feature_stats(z);
    EXPECT_LT(after.mean.abs().maxCoeff(), 1e-12);
    EXPECT_LT((after.stddev - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Standardize, InvertibleGivenStats) {
    const auto s = random_sequence("z", "c", Label::Normal, 50, 13);
    const auto other = random_sequence("y", "c", Label::Normal, 70, 14);
    const KeypointSequence* train[] = {&other};
    const FeatureStats stats = compute_feature_stats(train);
    const FrameMatrix back = destandardize(standardize(s.frames, stats), stats);
    EXPECT_LT((back - s.frames).cwiseAbs().maxCoeff(), 1e-9);
}

} // namespace
} // namespace gaitseq
