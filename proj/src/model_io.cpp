#include "gaitseq/model_io.hpp"

#include "gaitseq/errors.hpp"

#include <json.hpp>
#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gaitseq {

namespace {

using json = nlohmann::json;
constexpr std::string_view kMagic = "GSEQ1";

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t& pos) {
    if (pos + sizeof(T) > bytes.size()) throw ModelFormatError("model file truncated");
    T value;
    std::memcpy(&value, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

json arch_json(const ModelArchitecture& a) {
    return {{"num_layers", a.num_layers},
            {"hidden", a.hidden},
            {"input_dim", a.input_dim},
            {"dropout", a.dropout_rate},
            {"fcn_activation", std::string(to_string(a.fcn_activation))}};
}

ModelArchitecture arch_from_json(const json& j) {
    ModelArchitecture a;
    a.num_layers = j.at("num_layers").get<int>();
    a.hidden = j.at("hidden").get<int>();
    a.input_dim = j.at("input_dim").get<int>();
    a.dropout_rate = j.at("dropout").get<double>();
    auto act = parse_fcn_activation(j.at("fcn_activation").get<std::string>());
    if (!act) throw ModelFormatError("unknown fcn_activation in model header");
    a.fcn_activation = *act;
    return a;
}

std::vector<double> to_vector(const Eigen::Array<double, 1, kNumFeatures>& a) {
    return {a.data(), a.data() + a.size()};
}

} // namespace

std::string encode_model(const ModelParams<float>& params, const ModelMetadata& meta) {
    json header = {{"format_version", kModelFormatVersion},
                   {"arch", arch_json(params.arch())},
                   {"seed", meta.seed},
                   {"precision", "f32"},
                   {"created", meta.created},
                   {"seq_len", meta.seq_len},
                   {"standardize", meta.standardize},
                   {"feature_mean", to_vector(meta.stats.mean)},
                   {"feature_std", to_vector(meta.stats.stddev)}};
    const std::string header_text = header.dump();
    std::string out(kMagic);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(header_text.size()));
    out += header_text;
    put<std::uint64_t>(out, static_cast<std::uint64_t>(params.size()));
    const auto values = params.values();
    out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(float));
    put<std::uint32_t>(out, crc32_of(out));
    return out;
}

LoadedModel decode_model(std::string_view bytes, const std::optional<ModelArchitecture>& expected) {
    if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic) {
        throw ModelFormatError("not a model file (bad magic)");
    }
    if (bytes.size() < kMagic.size() + 4 + 4) throw ModelFormatError("model file truncated");
    const std::string_view body = bytes.substr(0, bytes.size() - 4);
    std::size_t tail = bytes.size() - 4;
    const auto stored_crc = get<std::uint32_t>(bytes, tail);
    if (stored_crc != crc32_of(body)) throw ModelFormatError("model file checksum mismatch (corrupt or truncated)");

    std::size_t pos = kMagic.size();
    const auto header_len = get<std::uint32_t>(body, pos);
    if (pos + header_len > body.size()) throw ModelFormatError("model file truncated");
    json header;
    try {
        header = json::parse(body.substr(pos, header_len));
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("model header is not valid JSON: ") + e.what());
    }
    pos += header_len;

    try {
        const int version = header.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw ModelFormatError("unsupported model format version " + std::to_string(version));
        }
        if (header.at("precision").get<std::string>() != "f32") throw ModelFormatError("unsupported precision");
        const ModelArchitecture arch = arch_from_json(header.at("arch"));
        if (expected && (expected->num_layers != arch.num_layers || expected->hidden != arch.hidden ||
                         expected->input_dim != arch.input_dim)) {
            throw ModelFormatError("architecture mismatch: file holds " + arch.shape_string() + ", requested " +
                                   expected->shape_string());
        }
        LoadedModel out{ModelParams<float>(arch), {}};
        const auto count = get<std::uint64_t>(body, pos);
        if (count != out.params.size()) throw ModelFormatError("parameter count does not match architecture");
        if (pos + count * sizeof(float) != body.size()) throw ModelFormatError("model file truncated");
        std::memcpy(out.params.values().data(), body.data() + pos, count * sizeof(float));

        out.metadata.seed = header.at("seed").get<std::uint64_t>();
        out.metadata.created = header.at("created").get<std::string>();
        out.metadata.seq_len = header.at("seq_len").get<int>();
        out.metadata.standardize = header.at("standardize").get<bool>();
        const auto mean = header.at("feature_mean").get<std::vector<double>>();
        const auto sd = header.at("feature_std").get<std::vector<double>>();
        if (mean.size() != kNumFeatures || sd.size() != kNumFeatures) throw ModelFormatError("bad feature stats");
        for (int c = 0; c < kNumFeatures; ++c) {
            out.metadata.stats.mean(c) = mean[static_cast<std::size_t>(c)];
            out.metadata.stats.stddev(c) = sd[static_cast<std::size_t>(c)];
        }
        return out;
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("model header malformed: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ModelFormatError(std::string("model header malformed: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const ModelParams<float>& params, const ModelMetadata& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const std::string bytes = encode_model(params, meta);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

LoadedModel load_model(const std::filesystem::path& path, const std::optional<ModelArchitecture>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_model(ss.str(), expected);
}

} // namespace gaitseq
