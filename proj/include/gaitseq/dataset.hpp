#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gaitseq {

inline constexpr int kNumKeypoints = 9;
inline constexpr int kNumFeatures = 2 * kNumKeypoints;

/// Keypoints in column order. Column 2k holds x and 2k+1 holds y of keypoint k.
enum class KeypointName : int {
    LeftHindHoof = 0,
    RightHindHoof,
    LeftFrontHoof,
    RightFrontHoof,
    Nose,
    Forehead,
    Withers,
    CaudalThoracicVertebrae,
    Sacrum,
};

enum class Axis : int { X = 0, Y = 1 };

constexpr int feature_column(KeypointName k, Axis a) noexcept {
    return 2 * static_cast<int>(k) + static_cast<int>(a);
}

/// Header names of the 18 coordinate columns, in matrix column order.
const std::array<std::string_view, kNumFeatures>& feature_column_names();

enum class Label : int { Normal = 0, Lame = 1 };

std::string_view to_string(Label label) noexcept;
/// Case-insensitive "normal" / "lame".
std::optional<Label> parse_label(std::string_view text);

/// F x 18 coordinates, one row per frame. Row-major so a frame is contiguous.
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct KeypointSequence {
    std::string sequence_id;
    std::string cow_id;
    Label label = Label::Normal;
    double fps = 30.0;
    FrameMatrix frames;
    /// Path of the CSV relative to the manifest; empty means `<sequence_id>.csv`.
    std::string file;

    [[nodiscard]] Eigen::Index num_frames() const noexcept { return frames.rows(); }
    bool operator==(const KeypointSequence&) const = default;
};

struct Dataset {
    std::vector<KeypointSequence> sequences;
    std::filesystem::path manifest_path;

    [[nodiscard]] std::size_t size() const noexcept { return sequences.size(); }
    bool operator==(const Dataset&) const = default;
};

struct SummaryRecord {
    std::size_t num_sequences = 0;
    std::size_t num_normal = 0;
    std::size_t num_lame = 0;
    std::size_t num_cows = 0;
    Eigen::Index min_frames = 0;
    double mean_frames = 0.0;
    Eigen::Index max_frames = 0;
};

/// Reads `manifest.json` and every sequence CSV it lists. Throws DataError.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes `manifest.json` plus one CSV per sequence into `dir`. All sequences
/// must share one fps since the manifest stores it once.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Parses a sequence CSV body; `origin` is used in error messages.
FrameMatrix parse_sequence_csv(std::string_view text, std::string_view origin);
std::string format_sequence_csv(const FrameMatrix& frames);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

SummaryRecord dataset_summary(const Dataset& dataset);

/// Human-readable invariant violations; empty iff the sequence is usable.
std::vector<std::string> validate_sequence(const KeypointSequence& sequence, Eigen::Index min_frames = 90);

} // namespace gaitseq
