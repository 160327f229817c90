#pragma once

// Model file layout (all integers little-endian):
//   "GSEQ1"                       5-byte magic
//   u32 header_length, header     JSON: format_version, arch, seed, precision, created, preprocessing
//   u64 param_count, f32[count]   parameters in ModelParams buffer order
//   u32 crc32                     over every preceding byte

#include "gaitseq/augmentation.hpp"
#include "gaitseq/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace gaitseq {

inline constexpr int kModelFormatVersion = 1;

struct ModelMetadata {
    std::uint64_t seed = 0;
    int seq_len = 90;
    bool standardize = false;
    FeatureStats stats = FeatureStats::identity();
    std::string created;
};

struct LoadedModel {
    ModelParams<float> params;
    ModelMetadata metadata;
};

std::string encode_model(const ModelParams<float>& params, const ModelMetadata& meta);
/// Throws ModelFormatError on bad magic, version, checksum, truncation or
/// (when `expected` is given) an architecture mismatch.
LoadedModel decode_model(std::string_view bytes, const std::optional<ModelArchitecture>& expected = {});

void save_model(const std::filesystem::path& path, const ModelParams<float>& params, const ModelMetadata& meta);
LoadedModel load_model(const std::filesystem::path& path, const std::optional<ModelArchitecture>& expected = {});

} // namespace gaitseq
