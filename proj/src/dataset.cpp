#include "gaitseq/dataset.hpp"

#include "gaitseq/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace gaitseq {

namespace fs = std::filesystem;
using json = nlohmann::json;

const std::array<std::string_view, kNumFeatures>& feature_column_names() {
    static const std::array<std::string_view, kNumFeatures> names = {
        "lh_hoof_x", "lh_hoof_y", "rh_hoof_x", "rh_hoof_y", "lf_hoof_x", "lf_hoof_y",
        "rf_hoof_x", "rf_hoof_y", "nose_x",    "nose_y",    "forehead_x", "forehead_y",
        "withers_x", "withers_y", "ctv_x",     "ctv_y",     "sacrum_x",  "sacrum_y",
    };
    return names;
}

std::string_view to_string(Label label) noexcept {
    return label == Label::Lame ? "lame" : "normal";
}

std::optional<Label> parse_label(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "normal") return Label::Normal;
    if (lower == "lame") return Label::Lame;
    return std::nullopt;
}

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw std::logic_error("format_double: buffer too small");
    return std::string(buf, end);
}

namespace {

std::string expected_header() {
    std::string h = "frame";
    for (auto name : feature_column_names()) {
        h += ',';
        h += name;
    }
    return h;
}

std::string_view trim_cr(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    return line;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc{} && ptr == field.data() + field.size() && !field.empty();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

FrameMatrix parse_sequence_csv(std::string_view text, std::string_view origin) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        lines.push_back(trim_cr(text.substr(start, pos - start)));
        start = pos + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();

    const std::string where(origin);
    if (lines.empty()) throw DataError(where + ": empty sequence file");
    if (lines.front() != expected_header()) throw DataError(where + " line 1: unexpected header");

    FrameMatrix frames(static_cast<Eigen::Index>(lines.size() - 1), kNumFeatures);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::string at = where + " line " + std::to_string(r + 1);
        auto fields = split_commas(lines[r]);
        if (fields.size() != kNumFeatures + 1) {
            throw DataError(at + ": expected " + std::to_string(kNumFeatures + 1) + " values, got " +
                            std::to_string(fields.size()));
        }
        long long frame_index = -1;
        if (!parse_number(fields[0], frame_index) || frame_index != static_cast<long long>(r - 1)) {
            throw DataError(at + ": frame index must be " + std::to_string(r - 1));
        }
        for (int c = 0; c < kNumFeatures; ++c) {
            double v = 0.0;
            if (!parse_number(fields[c + 1], v)) {
                throw DataError(at + ": non-numeric value in column " + std::string(feature_column_names()[c]));
            }
            frames(static_cast<Eigen::Index>(r - 1), c) = v;
        }
    }
    if (frames.rows() == 0) throw DataError(where + ": sequence has no frames");
    return frames;
}

std::string format_sequence_csv(const FrameMatrix& frames) {
    std::string out = expected_header();
    out += '\n';
    for (Eigen::Index r = 0; r < frames.rows(); ++r) {
        out += std::to_string(r);
        for (Eigen::Index c = 0; c < frames.cols(); ++c) {
            out += ',';
            out += format_double(frames(r, c));
        }
        out += '\n';
    }
    return out;
}

Dataset load_dataset(const fs::path& manifest_path) {
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw DataError(manifest_path.string() + ": invalid manifest JSON: " + e.what());
    }
    if (!manifest.is_object() || !manifest.contains("sequences") || !manifest["sequences"].is_array()) {
        throw DataError(manifest_path.string() + ": manifest must contain a \"sequences\" array");
    }
    double fps = 30.0;
    if (manifest.contains("fps")) {
        if (!manifest["fps"].is_number()) throw DataError(manifest_path.string() + ": \"fps\" must be a number");
        fps = manifest["fps"].get<double>();
    }
    if (!(fps > 0.0) || !std::isfinite(fps)) throw DataError(manifest_path.string() + ": fps must be positive");

    const auto& entries = manifest["sequences"];
    if (entries.empty()) throw DataError(manifest_path.string() + ": empty dataset");

    Dataset dataset;
    dataset.manifest_path = manifest_path;
    std::unordered_set<std::string> seen;
    const fs::path root = manifest_path.parent_path();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        const std::string where = manifest_path.string() + " entry " + std::to_string(i);
        auto field = [&](const char* key) -> std::string {
            if (!e.contains(key) || !e[key].is_string()) throw DataError(where + ": missing string field \"" + key + "\"");
            return e[key].get<std::string>();
        };
        KeypointSequence seq;
        seq.sequence_id = field("id");
        seq.cow_id = field("cow_id");
        seq.file = field("file");
        seq.fps = fps;
        const std::string label_text = field("label");
        auto label = parse_label(label_text);
        if (!label) throw DataError(where + " (" + seq.sequence_id + "): unknown label \"" + label_text + "\"");
        seq.label = *label;
        if (seq.sequence_id.empty()) throw DataError(where + ": empty sequence id");
        if (seq.cow_id.empty()) throw DataError(where + " (" + seq.sequence_id + "): empty cow_id");
        if (!seen.insert(seq.sequence_id).second) {
            throw DataError(where + ": duplicate sequence id \"" + seq.sequence_id + "\"");
        }
        const fs::path csv = root / seq.file;
        seq.frames = parse_sequence_csv(read_file(csv), "sequence " + seq.sequence_id + " (" + csv.string() + ")");
        dataset.sequences.push_back(std::move(seq));
    }
    return dataset;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
    if (dataset.sequences.empty()) throw DataError("write_dataset: empty dataset");
    const double fps = dataset.sequences.front().fps;
    fs::create_directories(dir);
    json entries = json::array();
    for (const auto& seq : dataset.sequences) {
        if (seq.fps != fps) throw DataError("write_dataset: sequences disagree on fps");
        const std::string file = seq.file.empty() ? seq.sequence_id + ".csv" : seq.file;
        const fs::path csv = dir / file;
        if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
        std::ofstream out(csv, std::ios::binary);
        if (!out) throw DataError("cannot write " + csv.string());
        out << format_sequence_csv(seq.frames);
        entries.push_back({{"id", seq.sequence_id},
                           {"cow_id", seq.cow_id},
                           {"label", std::string(to_string(seq.label))},
                           {"file", file}});
    }
    json manifest = {{"fps", fps}, {"sequences", entries}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

SummaryRecord dataset_summary(const Dataset& dataset) {
    if (dataset.sequences.empty()) throw DataError("dataset_summary: empty dataset");
    SummaryRecord s;
    std::set<std::string> cows;
    double total = 0.0;
    s.min_frames = dataset.sequences.front().num_frames();
    s.max_frames = s.min_frames;
    for (const auto& seq : dataset.sequences) {
        ++s.num_sequences;
        (seq.label == Label::Lame ? s.num_lame : s.num_normal) += 1;
        cows.insert(seq.cow_id);
        s.min_frames = std::min(s.min_frames, seq.num_frames());
        s.max_frames = std::max(s.max_frames, seq.num_frames());
        total += static_cast<double>(seq.num_frames());
    }
    s.num_cows = cows.size();
    s.mean_frames = std::round(10.0 * total / static_cast<double>(s.num_sequences)) / 10.0;
    return s;
}

std::vector<std::string> validate_sequence(const KeypointSequence& sequence, Eigen::Index min_frames) {
    std::vector<std::string> violations;
    const std::string& id = sequence.sequence_id;
    if (sequence.cow_id.empty()) violations.push_back(id + ": empty cow_id");
    if (!(sequence.fps > 0.0) || !std::isfinite(sequence.fps)) violations.push_back(id + ": fps must be positive");
    if (sequence.frames.cols() != kNumFeatures) {
        violations.push_back(id + ": expected " + std::to_string(kNumFeatures) + " columns, got " +
                             std::to_string(sequence.frames.cols()));
        return violations;
    }
    if (sequence.frames.rows() < 1) violations.push_back(id + ": no frames");
    if (sequence.frames.rows() < min_frames) {
        violations.push_back(id + ": too short (" + std::to_string(sequence.frames.rows()) + " frames, need " +
                             std::to_string(min_frames) + ")");
    }
    for (Eigen::Index r = 0; r < sequence.frames.rows(); ++r) {
        for (Eigen::Index c = 0; c < sequence.frames.cols(); ++c) {
            if (!std::isfinite(sequence.frames(r, c))) {
                violations.push_back(id + ": non-finite value at frame " + std::to_string(r) + ", column " +
                                     std::string(feature_column_names()[c]));
            }
        }
    }
    return violations;
}

} // namespace gaitseq
