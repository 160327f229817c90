#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gaitseq {

/// Scales `grads` so that their global L2 norm is at most `threshold`.
/// Returns the norm measured before clipping.
template <typename Scalar>
double clip_gradients(std::span<Scalar> grads, double threshold);

template <typename Scalar>
double global_norm(std::span<const Scalar> grads);

/// base_lr / 2^floor(epoch / halve_every).
double scheduled_lr(double base_lr, int epoch, int halve_every = 50);

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// AdamW with the AMSGrad running maximum of the second moment. Decoupled
/// weight decay is applied where `decay_mask` is nonzero (weights, not biases).
template <typename Scalar>
class AdamWAmsgrad {
public:
    AdamWAmsgrad(std::size_t num_params, AdamWConfig config, std::vector<unsigned char> decay_mask = {});

    void step(std::span<Scalar> params, std::span<const Scalar> grads, double lr);

    [[nodiscard]] long long steps_taken() const noexcept { return t_; }
    [[nodiscard]] const AdamWConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::span<const Scalar> first_moment() const noexcept { return m_; }
    [[nodiscard]] std::span<const Scalar> second_moment() const noexcept { return v_; }
    [[nodiscard]] std::span<const Scalar> max_second_moment() const noexcept { return vmax_; }

private:
    AdamWConfig config_;
    std::vector<unsigned char> decay_mask_;
    std::vector<Scalar> m_;
    std::vector<Scalar> v_;
    std::vector<Scalar> vmax_;
    long long t_ = 0;
};

} // namespace gaitseq
