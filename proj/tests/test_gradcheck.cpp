#include "gaitseq/gradcheck.hpp"
#include "gaitseq/training.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace gaitseq {
namespace {

ModelArchitecture tiny(int layers, double dropout = 0.0, FcnActivation act = FcnActivation::Relu) {
    ModelArchitecture a;
    a.num_layers = layers;
    a.hidden = 4;
    a.dropout_rate = dropout;
    a.fcn_activation = act;
    return a;
}

TEST(RelativeError, Definition) {
    EXPECT_DOUBLE_EQ(gradient_relative_error(1.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(gradient_relative_error(2.0, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(gradient_relative_error(0.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(gradient_relative_error(1e-10, 0.0), 1e-10 / kGradientFloor);
    EXPECT_DOUBLE_EQ(gradient_relative_error(2e-6, 1e-6), 0.5);
}

TEST(GradCheck, TwoAndThreeLayers) {
    for (int L : {2, 3}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const auto r = gradient_check(tiny(L), 5, 2, seed);
            EXPECT_EQ(r.num_params, param_count(tiny(L)));
            EXPECT_LT(r.max_relative_error, 1e-4) << "L=" << L << " seed=" << seed << " index " << r.worst_index << " a=" << r.worst_analytic << " n=" << r.worst_numeric;
        }
    }
}

TEST(GradCheck, WithReplayedDropoutMasks) {
    const auto r = gradient_check(tiny(2, 0.3), 5, 2, 11);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_index;
}

TEST(GradCheck, TanhHead) {
    const auto r = gradient_check(tiny(2, 0.0, FcnActivation::Tanh), 5, 2, 12);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_index;
}

TEST(GradCheck, SingleStep) {
    const auto r = gradient_check(tiny(1), 1, 1, 13);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_index;
}

// Finite differences computed here on the public forward, independent of the
// library's own checker.
TEST(GradCheck, IndependentCentralDifferences) {
    const auto arch = tiny(2);
    Rng rng(77);
    auto p = init_params<double>(arch, rng);
    std::normal_distribution<double> nd;
    FrameMatrix seq(5, kNumFeatures);
    for (Eigen::Index i = 0; i < seq.size(); ++i) seq.data()[i] = nd(rng);
    const double target = 1.0;

    const auto tape = model_forward(p, SequenceBatch<double>::pack(seq), Mode::Eval);
    const double dlogit = bce_with_logits(tape.logits(0), target).dlogit;
    const auto grads = model_backward(p, tape, std::span<const double>(&dlogit, 1));

    std::uniform_int_distribution<std::size_t> pick(0, p.size() - 1);
    for (int k = 0; k < 60; ++k) {
        const std::size_t i = pick(rng);
        const double saved = p.values()[i];
        const double h = 1e-5;
        p.values()[i] = saved + h;
        const double up = bce_with_logits(model_logit(p, seq), target).loss;
        p.values()[i] = saved - h;
        const double down = bce_with_logits(model_logit(p, seq), target).loss;
        p.values()[i] = saved;
        const double numeric = (up - down) / (2 * h);
        EXPECT_LT(gradient_relative_error(grads.values()[i], numeric), 1e-4) << i;
    }
}

} // namespace
} // namespace gaitseq
