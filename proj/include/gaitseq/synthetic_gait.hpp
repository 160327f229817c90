#pragma once

#include "gaitseq/dataset.hpp"
#include "gaitseq/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace gaitseq {

/// Kinematic template parameters for one gait class. Lengths are pixels,
/// periods are frames.
struct GaitParams {
    double stride_period = 31.0;
    double head_bob_amplitude = 2.0;
    double back_arch_offset = 0.0;
    double walk_speed = 4.0;
    double noise_sigma = 2.0;
    double fps = 30.0;

    /// Throws std::invalid_argument if stride_period < 2 or an amplitude is negative.
    void validate() const;
};

GaitParams default_normal_gait();
GaitParams default_lame_gait();

/// Per-animal variation shared by all sequences of one cow.
struct CowProfile {
    double body_scale = 1.0;
    double speed_factor = 1.0;

    static CowProfile draw(Rng& rng);
};

/// Walk of F frames. Hooves follow a stance/swing cycloid with the class's
/// stride period, head keypoints bob, the back carries the class arch offset.
KeypointSequence generate_sequence(Label label, const GaitParams& params, int num_frames, const std::string& cow_id,
                                   Rng& rng, const CowProfile& profile = {});

struct SyntheticDatasetSpec {
    int num_cows = 40;
    int seqs_per_cow = 5;
    double lame_fraction = 0.5;
    int min_frames = 90;
    int max_frames = 207;
    GaitParams normal = default_normal_gait();
    GaitParams lame = default_lame_gait();
    std::uint64_t seed = 0;
};

/// Cow-level labels, F uniform in [min_frames, max_frames]. Writes the dataset
/// to `out_dir` when given. Throws std::invalid_argument if a class would be empty.
Dataset generate_dataset(const SyntheticDatasetSpec& spec, const std::optional<std::filesystem::path>& out_dir = {});

} // namespace gaitseq
