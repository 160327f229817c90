#pragma once

#include "gaitseq/model.hpp"

#include <cstddef>
#include <cstdint>

namespace gaitseq {

struct GradCheckResult {
    std::size_t num_params = 0;
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Central differences in double precision at step 1e-5 carry roughly 1e-11 of
/// absolute rounding noise, so gradients smaller than this are compared on an
/// absolute scale.
inline constexpr double kGradientFloor = 1e-6;

/// |a - n| / max(|a|, |n|, kGradientFloor).
double gradient_relative_error(double analytic, double numeric) noexcept;

/// Draws a random double-precision model and batch from `seed`, then compares
/// the analytic gradient of the summed BCE loss against central differences
/// for every parameter. Dropout masks, when the architecture has dropout, are
/// drawn once and replayed for every perturbed evaluation.
GradCheckResult gradient_check(const ModelArchitecture& arch, int steps, int batch, std::uint64_t seed,
                               double step = 1e-5);

} // namespace gaitseq
