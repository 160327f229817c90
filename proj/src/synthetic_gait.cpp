#include "gaitseq/synthetic_gait.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace gaitseq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDutyFactor = 0.65;

struct HoofSpec {
    KeypointName name;
    double phase;
    double anchor;  // fraction of body length ahead of the body centre
    bool far_side;
};

constexpr HoofSpec kHooves[] = {
    {KeypointName::LeftHindHoof, 0.0, -0.38, false},
    {KeypointName::LeftFrontHoof, 0.25, 0.36, false},
    {KeypointName::RightHindHoof, 0.5, -0.38, true},
    {KeypointName::RightFrontHoof, 0.75, 0.36, true},
};

/// Fraction of a stride's forward travel completed at stride phase s in [0, 1).
/// Zero during stance, a cycloid during swing.
double hoof_progress(double s) {
    if (s < kDutyFactor) return 0.0;
    const double w = (s - kDutyFactor) / (1.0 - kDutyFactor);
    return w - std::sin(kTwoPi * w) / kTwoPi;
}

double hoof_lift(double s) {
    if (s < kDutyFactor) return 0.0;
    const double w = (s - kDutyFactor) / (1.0 - kDutyFactor);
    return 0.5 * (1.0 - std::cos(kTwoPi * w));
}

} // namespace

void GaitParams::validate() const {
    if (!(stride_period >= 2.0)) throw std::invalid_argument("stride_period must be at least 2 frames");
    if (head_bob_amplitude < 0.0 || back_arch_offset < 0.0 || noise_sigma < 0.0 || walk_speed < 0.0) {
        throw std::invalid_argument("gait amplitudes must be non-negative");
    }
    if (!(fps > 0.0)) throw std::invalid_argument("fps must be positive");
}

GaitParams default_normal_gait() {
    return GaitParams{};
}

GaitParams default_lame_gait() {
    GaitParams p;
    p.stride_period = 45.0;
    p.head_bob_amplitude = 8.0;
    p.back_arch_offset = 12.0;
    p.walk_speed = 3.0;
    return p;
}

CowProfile CowProfile::draw(Rng& rng) {
    std::uniform_real_distribution<double> scale(0.9, 1.1);
    std::uniform_real_distribution<double> speed(0.9, 1.1);
    CowProfile p;
    p.body_scale = scale(rng);
    p.speed_factor = speed(rng);
    return p;
}

KeypointSequence generate_sequence(Label label, const GaitParams& params, int num_frames, const std::string& cow_id,
                                   Rng& rng, const CowProfile& profile) {
    params.validate();
    if (num_frames < 1) throw std::invalid_argument("generate_sequence: need at least one frame");

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double scale = profile.body_scale;
    const double body_length = 300.0 * scale;
    const double speed = params.walk_speed * profile.speed_factor;
    const double period = params.stride_period;
    const double stride_length = speed * period;
    const double ground = 420.0 + 30.0 * (unit(rng) - 0.5);
    const double x0 = 80.0 + 60.0 * unit(rng);
    const double phase0 = unit(rng);
    const double head_phase = kTwoPi * unit(rng);

    KeypointSequence seq;
    seq.cow_id = cow_id;
    seq.label = label;
    seq.fps = params.fps;
    seq.frames.resize(num_frames, kNumFeatures);
    auto set = [&](int t, KeypointName k, double x, double y) {
        seq.frames(t, feature_column(k, Axis::X)) = x;
        seq.frames(t, feature_column(k, Axis::Y)) = y;
    };

    for (int t = 0; t < num_frames; ++t) {
        const double centre = x0 + speed * t;
        const double stride_phase = static_cast<double>(t) / period + phase0;

        for (const auto& hoof : kHooves) {
            const double u = stride_phase + hoof.phase;
            const double cycle = std::floor(u);
            const double s = u - cycle;
            // Completed strides plus swing progress; matches the body's drift on average.
            const double travel = stride_length * (cycle + hoof_progress(s) - hoof.phase - phase0);
            const double x = x0 + hoof.anchor * body_length + travel;
            const double base_y = hoof.far_side ? ground - 12.0 * scale : ground;
            set(t, hoof.name, x, base_y - 14.0 * scale * hoof_lift(s));
        }

        const double bob = params.head_bob_amplitude * std::sin(kTwoPi * stride_phase + head_phase);
        set(t, KeypointName::Nose, centre + 0.56 * body_length, ground - 110.0 * scale + bob);
        set(t, KeypointName::Forehead, centre + 0.50 * body_length, ground - 150.0 * scale + bob);

        const double sway = 1.5 * std::sin(2.0 * kTwoPi * stride_phase);
        const double back = ground - 200.0 * scale;
        set(t, KeypointName::Withers, centre + 0.30 * body_length, back + sway);
        set(t, KeypointName::CaudalThoracicVertebrae, centre, back + 4.0 * scale - params.back_arch_offset + sway);
        set(t, KeypointName::Sacrum, centre - 0.36 * body_length, back + 2.0 * scale + sway);
    }

    if (params.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, params.noise_sigma);
        for (Eigen::Index r = 0; r < seq.frames.rows(); ++r) {
            for (Eigen::Index c = 0; c < seq.frames.cols(); ++c) seq.frames(r, c) += noise(rng);
        }
    }
    return seq;
}

Dataset generate_dataset(const SyntheticDatasetSpec& spec, const std::optional<std::filesystem::path>& out_dir) {
    if (spec.num_cows < 2) throw std::invalid_argument("generate_dataset: need at least two cows");
    if (spec.seqs_per_cow < 1) throw std::invalid_argument("generate_dataset: need at least one sequence per cow");
    if (spec.min_frames < 1 || spec.max_frames < spec.min_frames) {
        throw std::invalid_argument("generate_dataset: invalid frame range");
    }
    const int num_lame = static_cast<int>(std::lround(spec.lame_fraction * spec.num_cows));
    if (num_lame <= 0 || num_lame >= spec.num_cows) {
        throw std::invalid_argument("generate_dataset: lame_fraction leaves one class empty");
    }

    std::vector<int> order(static_cast<std::size_t>(spec.num_cows));
    for (int i = 0; i < spec.num_cows; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng assign(derive_seed(spec.seed, {0}));
    std::shuffle(order.begin(), order.end(), assign);
    std::vector<Label> cow_label(order.size(), Label::Normal);
    for (int i = 0; i < num_lame; ++i) cow_label[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = Label::Lame;

    Dataset d;
    for (int cow = 0; cow < spec.num_cows; ++cow) {
        char name[32];
        std::snprintf(name, sizeof(name), "cow%03d", cow);
        const std::string cow_id = name;
        const Label label = cow_label[static_cast<std::size_t>(cow)];
        const GaitParams& params = label == Label::Lame ? spec.lame : spec.normal;
        Rng cow_rng(derive_seed(spec.seed, {1, hash_string(cow_id), static_cast<std::uint64_t>(label)}));
        const CowProfile profile = CowProfile::draw(cow_rng);
        for (int k = 0; k < spec.seqs_per_cow; ++k) {
            Rng rng(derive_seed(spec.seed, {2, hash_string(cow_id), static_cast<std::uint64_t>(label),
                                            static_cast<std::uint64_t>(k)}));
            std::uniform_int_distribution<int> frames(spec.min_frames, spec.max_frames);
            const int num_frames = frames(rng);
            KeypointSequence seq = generate_sequence(label, params, num_frames, cow_id, rng, profile);
            seq.sequence_id = cow_id + "_s" + std::to_string(k);
            seq.file = seq.sequence_id + ".csv";
            d.sequences.push_back(std::move(seq));
        }
    }
    if (out_dir) {
        write_dataset(d, *out_dir);
        d.manifest_path = *out_dir / "manifest.json";
    }
    return d;
}

} // namespace gaitseq
