#include "gaitseq/errors.hpp"
#include "gaitseq/evaluation.hpp"
#include "gaitseq/rng.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <random>
#include <vector>

namespace gaitseq {
namespace {

using testing::TempDir;

PredictionRecord rec(const std::string& id, Label truth, Label pred, double score = 0.5) {
    return {id, truth, pred, score};
}

std::vector<PredictionRecord> fixture(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
    std::vector<PredictionRecord> out;
    int i = 0;
    auto add = [&](std::size_t n, Label t, Label p) {
        for (std::size_t k = 0; k < n; ++k) out.push_back(rec("s" + std::to_string(i++), t, p, p == Label::Lame ? 0.8 : 0.2));
    };
    add(tp, Label::Lame, Label::Lame);
    add(tn, Label::Normal, Label::Normal);
    add(fp, Label::Normal, Label::Lame);
    add(fn, Label::Lame, Label::Normal);
    return out;
}

// Recomputes every metric by scanning the raw records.
MetricSet brute_force(const std::vector<PredictionRecord>& preds) {
    auto frac = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
    double correct = 0, lame = 0, lame_hit = 0, normal = 0, normal_hit = 0, pred_lame = 0, pred_normal = 0;
    for (const auto& r : preds) {
        const bool hit = r.true_label == r.predicted_label;
        correct += hit;
        if (r.true_label == Label::Lame) {
            ++lame;
            lame_hit += hit;
        } else {
            ++normal;
            normal_hit += hit;
        }
        (r.predicted_label == Label::Lame ? pred_lame : pred_normal) += 1;
    }
    MetricSet m;
    m.accuracy = frac(correct, static_cast<double>(preds.size()));
    m.sensitivity = frac(lame_hit, lame);
    m.specificity = frac(normal_hit, normal);
    // F1 = 2 TP / (|actual| + |predicted|) for each class taken as positive.
    const double f1_lame = frac(2 * lame_hit, lame + pred_lame);
    const double f1_normal = frac(2 * normal_hit, normal + pred_normal);
    m.macro_f1 = 0.5 * (f1_lame + f1_normal);
    return m;
}

TEST(Confusion, ConstructedFixture) {
    const auto preds = fixture(40, 45, 5, 10);
    const auto cm = confusion(preds);
    EXPECT_EQ(cm, (ConfusionMatrix{40, 5, 45, 10}));
    EXPECT_EQ(cm.total(), 100u);
    const auto single = confusion(fixture(0, 0, 0, 1));
    EXPECT_EQ(single.fn, 1u);
    const auto perfect = confusion(fixture(3, 4, 0, 0));
    EXPECT_EQ(perfect.fp + perfect.fn, 0u);
}

TEST(Confusion, Errors) {
    EXPECT_THROW(confusion({}), DataError);
    std::vector<PredictionRecord> dup = {rec("a", Label::Lame, Label::Lame), rec("a", Label::Normal, Label::Lame)};
    EXPECT_THROW(confusion(dup), DataError);
}

TEST(Metrics, ConstructedFixture) {
    const auto m = metrics(ConfusionMatrix{40, 5, 45, 10});
    EXPECT_DOUBLE_EQ(m.accuracy, 0.85);
    EXPECT_DOUBLE_EQ(m.sensitivity, 0.80);
    EXPECT_DOUBLE_EQ(m.specificity, 0.90);
    EXPECT_NEAR(m.macro_f1, 0.5 * (80.0 / 95.0 + 90.0 / 105.0), 1e-15);
    EXPECT_NEAR(m.macro_f1, 0.84962, 1e-5);
    EXPECT_FALSE(m.degenerate);
}

TEST(Metrics, PerfectAndDegenerate) {
    const auto perfect = metrics(ConfusionMatrix{7, 0, 3, 0});
    EXPECT_EQ(perfect.accuracy, 1.0);
    EXPECT_EQ(perfect.macro_f1, 1.0);
    EXPECT_EQ(perfect.sensitivity, 1.0);
    EXPECT_EQ(perfect.specificity, 1.0);

    const auto no_lame = metrics(ConfusionMatrix{0, 2, 8, 0});
    EXPECT_EQ(no_lame.sensitivity, 0.0);
    EXPECT_TRUE(no_lame.degenerate);
    EXPECT_DOUBLE_EQ(no_lame.accuracy, 0.8);
}

TEST(Metrics, MatchBruteForceOnRandomFixtures) {
    Rng rng(17);
    std::uniform_int_distribution<int> size(1, 60);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<PredictionRecord> preds;
        const int n = size(rng);
        const double lame_rate = (trial % 5) / 4.0;
        std::bernoulli_distribution is_lame(lame_rate);
        for (int i = 0; i < n; ++i) {
            preds.push_back(rec("r" + std::to_string(i), is_lame(rng) ? Label::Lame : Label::Normal,
                                coin(rng) ? Label::Lame : Label::Normal));
        }
        const auto got = metrics(confusion(preds));
        const auto want = brute_force(preds);
        EXPECT_EQ(got.accuracy, want.accuracy);
        EXPECT_EQ(got.sensitivity, want.sensitivity);
        EXPECT_EQ(got.specificity, want.specificity);
        EXPECT_EQ(got.macro_f1, want.macro_f1);

        std::shuffle(preds.begin(), preds.end(), rng);
        const auto shuffled = metrics(confusion(preds));
        EXPECT_EQ(shuffled.macro_f1, got.macro_f1);

        // Class swap: accuracy and macro F1 invariant, sensitivity <-> specificity.
        for (auto& r : preds) {
            r.true_label = r.true_label == Label::Lame ? Label::Normal : Label::Lame;
            r.predicted_label = r.predicted_label == Label::Lame ? Label::Normal : Label::Lame;
        }
        const auto swapped = metrics(confusion(preds));
        EXPECT_EQ(swapped.accuracy, got.accuracy);
        EXPECT_EQ(swapped.macro_f1, got.macro_f1);
        EXPECT_EQ(swapped.sensitivity, got.specificity);
        EXPECT_EQ(swapped.specificity, got.sensitivity);
    }
}

// Two-sided exact p by enumerating all 2^n sign patterns.
double enumerated_p(int b, int c) {
    const int n = b + c;
    if (n == 0) return 1.0;
    const int k = std::min(b, c);
    unsigned long long count = 0;
    for (unsigned long long mask = 0; mask < (1ull << n); ++mask) count += std::popcount(mask) <= k;
    return std::min(1.0, 2.0 * static_cast<double>(count) / static_cast<double>(1ull << n));
}

TEST(McNemar, KnownValues) {
    EXPECT_EQ(mcnemar_exact_p(0, 10), 0.001953125);
    EXPECT_EQ(mcnemar_exact_p(0, 0), 1.0);
    EXPECT_EQ(mcnemar_exact_p(5, 5), 1.0);
    McNemarResult r;
    r.p_value = mcnemar_exact_p(0, 10);
    EXPECT_TRUE(r.significant());
}

TEST(McNemar, MatchesEnumerationUpToTwenty) {
    for (int n = 0; n <= 20; ++n) {
        for (int b = 0; b <= n; ++b) {
            EXPECT_EQ(mcnemar_exact_p(static_cast<std::size_t>(b), static_cast<std::size_t>(n - b)), enumerated_p(b, n - b))
                << b << "," << n - b;
        }
    }
}

TEST(McNemar, SymmetricAndMonotone) {
    for (std::size_t n = 1; n <= 300; n += 7) {
        double prev = 2.0;
        // Walk b from n/2 down to 0: |b - c| grows.
        for (std::size_t b = n / 2 + 1; b-- > 0;) {
            const double p = mcnemar_exact_p(b, n - b);
            EXPECT_EQ(p, mcnemar_exact_p(n - b, b));
            EXPECT_GT(p, 0.0);
            EXPECT_LE(p, 1.0);
            EXPECT_LE(p, prev);
            prev = p;
        }
    }
    const double big = mcnemar_exact_p(1400, 1600);
    EXPECT_GT(big, 0.0);
    EXPECT_LT(big, 0.05);
    EXPECT_NEAR(mcnemar_exact_p(1500, 1500), 1.0, 1e-12);
}

TEST(McNemar, PairsRecordsById) {
    std::vector<PredictionRecord> a = {rec("x", Label::Lame, Label::Lame), rec("y", Label::Normal, Label::Lame),
                                       rec("z", Label::Normal, Label::Normal)};
    std::vector<PredictionRecord> b = {rec("z", Label::Normal, Label::Lame), rec("x", Label::Lame, Label::Lame),
                                       rec("y", Label::Normal, Label::Normal)};
    const auto r = mcnemar_exact(a, b);
    EXPECT_EQ(r.b, 1u);
    EXPECT_EQ(r.c, 1u);
    EXPECT_EQ(r.p_value, 1.0);
    const auto same = mcnemar_exact(a, a);
    EXPECT_EQ(same.b + same.c, 0u);
    EXPECT_EQ(same.p_value, 1.0);

    auto missing = b;
    missing[0].sequence_id = "w";
    EXPECT_THROW(mcnemar_exact(a, missing), DataError);
    auto relabeled = b;
    relabeled[0].true_label = Label::Lame;
    EXPECT_THROW(mcnemar_exact(a, relabeled), DataError);
}

TEST(Aggregate, MeanAndPopulationStd) {
    MetricSet a, b;
    a.accuracy = 0.80;
    b.accuracy = 0.90;
    const std::vector<MetricSet> folds = {a, b};
    const auto s = aggregate_folds(folds);
    EXPECT_NEAR(s.mean.accuracy, 0.85, 1e-15);
    EXPECT_NEAR(s.stddev.accuracy, 0.05, 1e-15);
    const std::vector<MetricSet> same = {a, a, a};
    EXPECT_EQ(aggregate_folds(same).stddev.accuracy, 0.0);
    EXPECT_EQ(format_percent(0.8447), "84.47");
    EXPECT_EQ(format_percent(1.0), "100.00");
}

TEST(PredictionsCsv, RoundTrip) {
    TempDir dir("eval");
    const auto preds = fixture(2, 1, 1, 1);
    auto scored = preds;
    scored[0].score = 0.123456789012345;
    write_predictions_csv(dir.path() / "p.csv", scored);
    const auto back = read_predictions_csv(dir.path() / "p.csv");
    ASSERT_EQ(back.size(), scored.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].sequence_id, scored[i].sequence_id);
        EXPECT_EQ(back[i].true_label, scored[i].true_label);
        EXPECT_EQ(back[i].predicted_label, scored[i].predicted_label);
        EXPECT_EQ(back[i].score, scored[i].score);
    }
    EXPECT_THROW(read_predictions_csv(dir.path() / "none.csv"), DataError);
}

} // namespace
} // namespace gaitseq
