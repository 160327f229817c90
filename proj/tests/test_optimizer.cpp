#include "gaitseq/optimizer.hpp"
#include "gaitseq/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace gaitseq {
namespace {

TEST(Clip, ScalesToThreshold) {
    std::vector<double> g = {0.6, 0.8};
    const double before = clip_gradients<double>(g, 0.5);
    EXPECT_DOUBLE_EQ(before, 1.0);
    EXPECT_NEAR(g[0], 0.3, 1e-15);
    EXPECT_NEAR(g[1], 0.4, 1e-15);
}

TEST(Clip, BelowThresholdUnchanged) {
    std::vector<double> g = {0.18, 0.24};
    const auto copy = g;
    clip_gradients<double>(g, 0.5);
    EXPECT_EQ(g, copy);
    std::vector<double> zero(5, 0.0);
    clip_gradients<double>(zero, 0.5);
    for (double v : zero) EXPECT_EQ(v, 0.0);
}

TEST(Clip, PostClipNormBoundedForRandomInputs) {
    Rng rng(5);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> scale(-6.0, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<float> g(1 + trial % 97);
        const double s = std::pow(10.0, scale(rng));
        for (float& v : g) v = static_cast<float>(s * nd(rng));
        clip_gradients<float>(g, 0.5);
        EXPECT_LE(global_norm<float>(g), 0.5 + 1e-6);
    }
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> g(1 + trial % 97);
        const double s = std::pow(10.0, scale(rng));
        for (double& v : g) v = s * nd(rng);
        clip_gradients<double>(g, 0.5);
        EXPECT_LE(global_norm<double>(g), 0.5 + 1e-12);
    }
}

TEST(Schedule, HalvesEveryFiftyEpochs) {
    const double base = 1e-3;
    EXPECT_EQ(scheduled_lr(base, 0), base);
    EXPECT_EQ(scheduled_lr(base, 49), base);
    EXPECT_EQ(scheduled_lr(base, 50), base / 2);
    EXPECT_EQ(scheduled_lr(base, 99), base / 2);
    EXPECT_EQ(scheduled_lr(base, 100), base / 4);
    double prev = scheduled_lr(base, 0);
    for (int e = 1; e < 400; ++e) {
        const double lr = scheduled_lr(base, e);
        EXPECT_LE(lr, prev);
        EXPECT_EQ(lr, base / std::pow(2.0, e / 50));
        prev = lr;
    }
    EXPECT_EQ(scheduled_lr(0.37, 0), 0.37);
}

TEST(AdamW, FirstScalarStep) {
    AdamWAmsgrad<double> opt(1, AdamWConfig{});
    std::vector<double> theta = {0.0};
    const std::vector<double> g = {1.0};
    opt.step(theta, g, 0.1);
    EXPECT_NEAR(theta[0], -0.1 / (1.0 + 1e-8), 1e-15);
    EXPECT_NEAR(theta[0], -0.1, 1e-6);
    EXPECT_EQ(opt.steps_taken(), 1);
}

TEST(AdamW, ZeroGradientNoDecayLeavesParameters) {
    AdamWAmsgrad<double> opt(3, AdamWConfig{}, {1, 1, 0});
    std::vector<double> theta = {1.5, -2.0, 0.25};
    const auto start = theta;
    const std::vector<double> g(3, 0.0);
    for (int i = 0; i < 100; ++i) opt.step(theta, g, 1e-3);
    EXPECT_EQ(theta, start);
}

TEST(AdamW, DecayOnlyOnMaskedEntries) {
    AdamWConfig cfg;
    cfg.weight_decay = 0.1;
    AdamWAmsgrad<double> opt(2, cfg, {1, 0});
    std::vector<double> theta = {2.0, 2.0};
    const std::vector<double> g(2, 0.0);
    opt.step(theta, g, 0.5);
    EXPECT_DOUBLE_EQ(theta[0], 2.0 - 0.5 * 0.1 * 2.0);
    EXPECT_DOUBLE_EQ(theta[1], 2.0);
}

TEST(AdamW, MaxSecondMomentNeverDecreases) {
    Rng rng(8);
    std::normal_distribution<double> nd;
    const std::size_t n = 16;
    AdamWAmsgrad<double> opt(n, AdamWConfig{});
    std::vector<double> theta(n, 0.0), g(n);
    std::vector<double> prev(n, 0.0);
    for (int step = 0; step < 300; ++step) {
        const double scale = step < 100 ? 1.0 : 0.01;
        for (double& v : g) v = scale * nd(rng);
        opt.step(theta, g, 1e-3);
        const auto vmax = opt.max_second_moment();
        const auto v = opt.second_moment();
        for (std::size_t k = 0; k < n; ++k) {
            EXPECT_GE(vmax[k], prev[k]);
            EXPECT_GE(v[k], 0.0);
            EXPECT_GE(vmax[k], v[k]);
            prev[k] = vmax[k];
        }
    }
}

TEST(AdamW, ConstantMaxWhenGradientsShrink) {
    AdamWAmsgrad<double> opt(1, AdamWConfig{});
    std::vector<double> theta = {0.0};
    std::vector<double> g = {1.0};
    opt.step(theta, g, 1e-3);
    const double peak = opt.max_second_moment()[0];
    for (int i = 0; i < 50; ++i) {
        g[0] = 0.0;
        opt.step(theta, g, 1e-3);
        EXPECT_EQ(opt.max_second_moment()[0], peak);
    }
}

TEST(AdamW, MatchesTextbookAdamWhileSecondMomentRises) {
    // Increasing |g| keeps v at its running maximum, so AMSGrad reduces to Adam.
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.01;
    AdamWAmsgrad<double> opt(1, AdamWConfig{});
    std::vector<double> theta = {0.3};
    double th = 0.3, m = 0.0, v = 0.0;
    for (int t = 1; t <= 40; ++t) {
        const double g = 0.1 * t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        th -= lr * mhat / (std::sqrt(vhat) + eps);
        const std::vector<double> gv = {g};
        opt.step(theta, gv, lr);
        EXPECT_NEAR(theta[0], th, 1e-10) << t;
    }
}

TEST(AdamW, MatchesAmsgradOracleWithDecay) {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.05;
    AdamWConfig cfg;
    cfg.weight_decay = wd;
    const std::size_t n = 4;
    AdamWAmsgrad<double> opt(n, cfg, {1, 0, 1, 0});
    Rng rng(2);
    std::normal_distribution<double> nd;
    std::vector<double> theta(n), ref(n), m(n, 0.0), v(n, 0.0), vmax(n, 0.0), g(n);
    for (std::size_t k = 0; k < n; ++k) theta[k] = ref[k] = nd(rng);
    for (int t = 1; t <= 120; ++t) {
        const double lr = scheduled_lr(1e-2, t, 50);
        for (double& x : g) x = nd(rng) / t;
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = b1 * m[k] + (1 - b1) * g[k];
            v[k] = b2 * v[k] + (1 - b2) * g[k] * g[k];
            vmax[k] = std::max(vmax[k], v[k]);
            const double upd = (m[k] / (1 - std::pow(b1, t))) / (std::sqrt(vmax[k] / (1 - std::pow(b2, t))) + eps);
            ref[k] = ref[k] - lr * upd - (k % 2 == 0 ? lr * wd * ref[k] : 0.0);
        }
        opt.step(theta, g, lr);
        for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(theta[k], ref[k], 1e-10) << t << "," << k;
    }
}

} // namespace
} // namespace gaitseq
