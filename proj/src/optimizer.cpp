#include "gaitseq/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaitseq {

template <typename Scalar>
double global_norm(std::span<const Scalar> grads) {
    double sum = 0.0;
    for (Scalar g : grads) sum += static_cast<double>(g) * static_cast<double>(g);
    return std::sqrt(sum);
}

template <typename Scalar>
double clip_gradients(std::span<Scalar> grads, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("clip threshold must be positive");
    const double norm = global_norm(std::span<const Scalar>(grads));
    if (norm > threshold) {
        const double scale = threshold / norm;
        for (Scalar& g : grads) g = static_cast<Scalar>(static_cast<double>(g) * scale);
    }
    return norm;
}

double scheduled_lr(double base_lr, int epoch, int halve_every) {
    if (epoch < 0) throw std::invalid_argument("epoch must be non-negative");
    if (halve_every < 1) throw std::invalid_argument("halving interval must be positive");
    return std::ldexp(base_lr, -(epoch / halve_every));
}

template <typename Scalar>
AdamWAmsgrad<Scalar>::AdamWAmsgrad(std::size_t num_params, AdamWConfig config, std::vector<unsigned char> decay_mask)
    : config_(config), decay_mask_(std::move(decay_mask)), m_(num_params, Scalar(0)), v_(num_params, Scalar(0)),
      vmax_(num_params, Scalar(0)) {
    if (decay_mask_.empty()) decay_mask_.assign(num_params, 1);
    if (decay_mask_.size() != num_params) throw std::invalid_argument("decay mask size mismatch");
}

template <typename Scalar>
void AdamWAmsgrad<Scalar>::step(std::span<Scalar> params, std::span<const Scalar> grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw std::invalid_argument("optimizer parameter/gradient size mismatch");
    }
    ++t_;
    const Scalar b1 = static_cast<Scalar>(config_.beta1);
    const Scalar b2 = static_cast<Scalar>(config_.beta2);
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const Scalar step_size = static_cast<Scalar>(lr / bc1);
    const Scalar inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
    const Scalar eps = static_cast<Scalar>(config_.eps);
    const Scalar decay = static_cast<Scalar>(lr * config_.weight_decay);

    for (std::size_t k = 0; k < params.size(); ++k) {
        const Scalar g = grads[k];
        m_[k] = b1 * m_[k] + (Scalar(1) - b1) * g;
        v_[k] = b2 * v_[k] + (Scalar(1) - b2) * g * g;
        vmax_[k] = std::max(vmax_[k], v_[k]);
        const Scalar denom = std::sqrt(vmax_[k]) * inv_sqrt_bc2 + eps;
        const Scalar theta = params[k];
        Scalar updated = theta - step_size * m_[k] / denom;
        if (decay_mask_[k]) updated -= decay * theta;
        params[k] = updated;
    }
}

template double global_norm<float>(std::span<const float>);
template double global_norm<double>(std::span<const double>);
template double clip_gradients<float>(std::span<float>, double);
template double clip_gradients<double>(std::span<double>, double);
template class AdamWAmsgrad<float>;
template class AdamWAmsgrad<double>;

} // namespace gaitseq
