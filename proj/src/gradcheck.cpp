#include "gaitseq/gradcheck.hpp"

#include "gaitseq/training.hpp"

#include <algorithm>
#include <cmath>

namespace gaitseq {

double gradient_relative_error(double analytic, double numeric) noexcept {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradientFloor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckResult gradient_check(const ModelArchitecture& arch, int steps, int batch, std::uint64_t seed, double step) {
    Rng rng(seed);
    ModelParams<double> params = init_params<double>(arch, rng);

    SequenceBatch<double> input;
    input.steps = steps;
    input.batch = batch;
    input.x.resize(arch.input_dim, static_cast<Eigen::Index>(steps) * batch);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < input.x.size(); ++i) input.x.data()[i] = normal(rng);
    std::vector<double> targets(static_cast<std::size_t>(batch));
    std::bernoulli_distribution coin(0.5);
    for (double& t : targets) t = coin(rng) ? 1.0 : 0.0;

    DropoutMasks<double> masks;
    if (arch.dropout_rate > 0.0) masks = draw_dropout_masks<double>(arch, steps, batch, rng);

    auto loss_of = [&](const ModelParams<double>& p, std::vector<double>* dlogits) {
        const auto tape = model_forward(p, input, Mode::Train, nullptr, &masks);
        double loss = 0.0;
        for (int b = 0; b < batch; ++b) {
            const auto lg = bce_with_logits(tape.logits(b), targets[static_cast<std::size_t>(b)]);
            loss += lg.loss;
            if (dlogits) (*dlogits)[static_cast<std::size_t>(b)] = lg.dlogit;
        }
        return loss;
    };

    std::vector<double> dlogits(static_cast<std::size_t>(batch));
    loss_of(params, &dlogits);
    const auto tape = model_forward(params, input, Mode::Train, nullptr, &masks);
    const ModelParams<double> grads = model_backward(params, tape, std::span<const double>(dlogits));

    GradCheckResult result;
    result.num_params = params.size();
    auto values = params.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + step;
        const double plus = loss_of(params, nullptr);
        values[i] = saved - step;
        const double minus = loss_of(params, nullptr);
        values[i] = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double analytic = grads.values()[i];
        const double err = gradient_relative_error(analytic, numeric);
        if (err > result.max_relative_error || i == 0) {
            result.max_relative_error = std::max(result.max_relative_error, err);
            result.worst_index = i;
            result.worst_analytic = analytic;
            result.worst_numeric = numeric;
        }
    }
    return result;
}

} // namespace gaitseq
