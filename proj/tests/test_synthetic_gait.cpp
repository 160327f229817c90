#include "gaitseq/synthetic_gait.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

namespace gaitseq {
namespace {

using testing::dominant_period;
using testing::TempDir;
using testing::x_velocity;

const int kHindHoofX = feature_column(KeypointName::LeftHindHoof, Axis::X);

int hoof_period(const KeypointSequence& s) { return dominant_period(x_velocity(s, kHindHoofX), 15, 70); }

TEST(GaitParams, Validation) {
    GaitParams p;
    EXPECT_NO_THROW(p.validate());
    p.stride_period = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = GaitParams{};
    p.head_bob_amplitude = -1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(GaitParams, LameDefaultsDifferInTheExpectedDirection) {
    const auto n = default_normal_gait();
    const auto l = default_lame_gait();
    EXPECT_EQ(n.stride_period, 31.0);
    EXPECT_EQ(l.stride_period, 45.0);
    EXPECT_GT(l.head_bob_amplitude, n.head_bob_amplitude);
    EXPECT_GT(l.back_arch_offset, 0.0);
    EXPECT_LT(l.walk_speed, n.walk_speed);
    EXPECT_EQ(n.noise_sigma, 2.0);
    EXPECT_EQ(n.fps, 30.0);
}

TEST(GenerateSequence, DominantStridePeriod) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng a(seed), b(seed + 100);
        const auto normal = generate_sequence(Label::Normal, default_normal_gait(), 207, "c", a);
        const auto lame = generate_sequence(Label::Lame, default_lame_gait(), 207, "c", b);
        EXPECT_NEAR(hoof_period(normal), 31, 2) << seed;
        EXPECT_NEAR(hoof_period(lame), 45, 2) << seed;
    }
}

TEST(GenerateSequence, ShapeAndDeterminism) {
    Rng a(5), b(5);
    const auto s1 = generate_sequence(Label::Lame, default_lame_gait(), 120, "cow7", a);
    const auto s2 = generate_sequence(Label::Lame, default_lame_gait(), 120, "cow7", b);
    EXPECT_EQ(s1.frames, s2.frames);
    EXPECT_EQ(s1.frames.rows(), 120);
    EXPECT_EQ(s1.frames.cols(), kNumFeatures);
    EXPECT_EQ(s1.cow_id, "cow7");
    EXPECT_EQ(s1.label, Label::Lame);
    EXPECT_TRUE(validate_sequence(s1).empty());
    Rng one(1);
    EXPECT_EQ(generate_sequence(Label::Normal, default_normal_gait(), 1, "c", one).frames.rows(), 1);
}

TEST(GenerateSequence, NoiseFreeHoofHasStationaryStance) {
    auto p = default_normal_gait();
    p.noise_sigma = 0.0;
    Rng rng(3);
    const auto s = generate_sequence(Label::Normal, p, 124, "c", rng);
    const auto v = x_velocity(s, kHindHoofX);
    int still = 0;
    for (double dv : v) still += std::abs(dv) < 1e-9;
    // Roughly the stance share of each stride is motionless.
    EXPECT_GT(still, static_cast<int>(0.4 * static_cast<double>(v.size())));
    EXPECT_LT(still, static_cast<int>(0.85 * static_cast<double>(v.size())));
}

TEST(GenerateDataset, CountsLabelsAndFrameRange) {
    SyntheticDatasetSpec spec;
    spec.seed = 11;
    const Dataset d = generate_dataset(spec);
    ASSERT_EQ(d.sequences.size(), 200u);
    int lame = 0;
    std::set<std::string> cows;
    std::map<std::string, Label> cow_label;
    for (const auto& s : d.sequences) {
        lame += s.label == Label::Lame;
        cows.insert(s.cow_id);
        auto [it, inserted] = cow_label.emplace(s.cow_id, s.label);
        EXPECT_EQ(it->second, s.label) << s.cow_id;
        EXPECT_GE(s.num_frames(), 90);
        EXPECT_LE(s.num_frames(), 207);
        EXPECT_TRUE(validate_sequence(s).empty()) << s.sequence_id;
    }
    EXPECT_EQ(lame, 100);
    EXPECT_EQ(cows.size(), 40u);
}

TEST(GenerateDataset, SingleClassIsRejected) {
    SyntheticDatasetSpec spec;
    spec.lame_fraction = 0.0;
    EXPECT_THROW(generate_dataset(spec), std::invalid_argument);
    spec.lame_fraction = 1.0;
    EXPECT_THROW(generate_dataset(spec), std::invalid_argument);
}

TEST(GenerateDataset, DeterministicAndWrittenFilesReload) {
    SyntheticDatasetSpec spec;
    spec.num_cows = 6;
    spec.seqs_per_cow = 2;
    spec.seed = 4;
    TempDir dir("syn");
    const Dataset a = generate_dataset(spec, dir.path());
    const Dataset b = generate_dataset(spec);
    ASSERT_EQ(a.sequences.size(), b.sequences.size());
    for (std::size_t i = 0; i < a.sequences.size(); ++i) {
        EXPECT_EQ(a.sequences[i].sequence_id, b.sequences[i].sequence_id);
        EXPECT_EQ(a.sequences[i].frames, b.sequences[i].frames);
    }
    const Dataset loaded = load_dataset(dir.path() / "manifest.json");
    ASSERT_EQ(loaded.sequences.size(), a.sequences.size());
    for (std::size_t i = 0; i < a.sequences.size(); ++i) {
        EXPECT_EQ(loaded.sequences[i].frames, a.sequences[i].frames);
        EXPECT_EQ(loaded.sequences[i].label, a.sequences[i].label);
    }
    spec.seed = 5;
    EXPECT_NE(generate_dataset(spec).sequences[0].frames, a.sequences[0].frames);
}

TEST(GenerateDataset, StridePeriodThresholdSeparatesClasses) {
    SyntheticDatasetSpec spec;
    spec.seed = 2;
    const Dataset d = generate_dataset(spec);
    int correct = 0;
    for (const auto& s : d.sequences) {
        const Label guess = hoof_period(s) >= 38 ? Label::Lame : Label::Normal;
        correct += guess == s.label;
    }
    EXPECT_GE(correct, static_cast<int>(0.99 * static_cast<double>(d.sequences.size())));
}

} // namespace
} // namespace gaitseq
