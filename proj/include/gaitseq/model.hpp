#pragma once

// Stacked bidirectional LSTM classifier with a two-layer fully-connected head.
//
// All parameters live in one flat buffer so that clipping, the optimizer and
// serialization can treat them as a single vector. The buffer order is:
// layers ascending; within a layer the forward direction then the backward
// direction; within a direction W (4h x i), U (4h x h), b (4h); then the head
// W1 (h x 2h), b1 (h), W2 (1 x h), b2 (1). Matrices are row-major and gate rows
// are ordered [input, forget, candidate, output].

#include "gaitseq/dataset.hpp"
#include "gaitseq/rng.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gaitseq {

enum class FcnActivation { Relu, Tanh };

std::string_view to_string(FcnActivation a) noexcept;
std::optional<FcnActivation> parse_fcn_activation(std::string_view text);

struct ModelArchitecture {
    int num_layers = 2;
    int hidden = 128;
    int input_dim = kNumFeatures;
    double dropout_rate = 0.0;
    FcnActivation fcn_activation = FcnActivation::Relu;

    /// Throws std::invalid_argument on an inconsistent architecture.
    void validate() const;
    /// "LxH", e.g. "3x128".
    [[nodiscard]] std::string shape_string() const;
    /// Parses "LxH"; input_dim and dropout keep their defaults.
    static ModelArchitecture parse(std::string_view text);

    bool operator==(const ModelArchitecture&) const = default;
};

std::size_t param_count(const ModelArchitecture& arch);

enum class Direction { Forward = 0, Backward = 1 };
enum class Mode { Train, Eval };

struct DirectionLayout {
    std::size_t w = 0;
    std::size_t u = 0;
    std::size_t b = 0;
    int input = 0;
    int hidden = 0;
    bool operator==(const DirectionLayout&) const = default;
};

struct ParamLayout {
    explicit ParamLayout(const ModelArchitecture& arch);

    std::vector<std::array<DirectionLayout, 2>> layers;
    std::size_t w1 = 0;
    std::size_t b1 = 0;
    std::size_t w2 = 0;
    std::size_t b2 = 0;
    std::size_t total = 0;

    [[nodiscard]] const DirectionLayout& at(int layer, Direction d) const {
        return layers[static_cast<std::size_t>(layer)][static_cast<std::size_t>(d)];
    }
    /// 1 for weight-matrix entries, 0 for biases.
    [[nodiscard]] std::vector<unsigned char> decay_mask() const;
    bool operator==(const ParamLayout&) const = default;
};

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct LstmDirectionView {
    Eigen::Map<const RowMat<Scalar>> W;
    Eigen::Map<const RowMat<Scalar>> U;
    Eigen::Map<const Vec<Scalar>> b;
    [[nodiscard]] int hidden() const noexcept { return static_cast<int>(U.cols()); }
};

/// Parameters (or gradients, which share the layout) of a model.
template <typename Scalar>
class ModelParams {
public:
    using MutMat = Eigen::Map<RowMat<Scalar>>;
    using MutVec = Eigen::Map<Vec<Scalar>>;
    using ConstMat = Eigen::Map<const RowMat<Scalar>>;
    using ConstVec = Eigen::Map<const Vec<Scalar>>;

    explicit ModelParams(const ModelArchitecture& arch);

    [[nodiscard]] const ModelArchitecture& arch() const noexcept { return arch_; }
    [[nodiscard]] const ParamLayout& layout() const noexcept { return layout_; }
    [[nodiscard]] std::span<Scalar> values() noexcept { return values_; }
    [[nodiscard]] std::span<const Scalar> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] LstmDirectionView<Scalar> direction(int layer, Direction d) const;
    MutMat W(int layer, Direction d);
    MutMat U(int layer, Direction d);
    MutVec b(int layer, Direction d);
    MutMat W1();
    MutVec b1();
    MutMat W2();
    MutVec b2();
    [[nodiscard]] ConstMat W1() const;
    [[nodiscard]] ConstVec b1() const;
    [[nodiscard]] ConstMat W2() const;
    [[nodiscard]] ConstVec b2() const;

    void set_zero();

    template <typename Other>
    [[nodiscard]] ModelParams<Other> cast() const {
        ModelParams<Other> out(arch_);
        auto dst = out.values();
        for (std::size_t i = 0; i < values_.size(); ++i) dst[i] = static_cast<Other>(values_[i]);
        return out;
    }

    bool operator==(const ModelParams&) const = default;

private:
    ModelArchitecture arch_;
    ParamLayout layout_;
    // Aligned so that vectorized reductions see the same alignment on every run.
    std::vector<Scalar, Eigen::aligned_allocator<Scalar>> values_;
};

/// Every weight and bias i.i.d. Uniform(-1/sqrt(h), 1/sqrt(h)).
template <typename Scalar>
ModelParams<Scalar> init_params(const ModelArchitecture& arch, Rng& rng);

/// B sequences of T steps packed column-wise: column t*B + b is step t of sequence b.
template <typename Scalar>
struct SequenceBatch {
    int steps = 0;
    int batch = 0;
    Mat<Scalar> x;

    /// Packs T x i row-per-frame matrices (all the same T) into one batch.
    static SequenceBatch pack(std::span<const FrameMatrix> sequences);
    static SequenceBatch pack(const FrameMatrix& sequence);
};

template <typename Scalar>
struct CellState {
    Vec<Scalar> h;
    Vec<Scalar> c;
};

template <typename Scalar>
CellState<Scalar> lstm_cell_forward(const Vec<Scalar>& x, const Vec<Scalar>& h_prev, const Vec<Scalar>& c_prev,
                                    const LstmDirectionView<Scalar>& p);

template <typename Scalar>
struct DirectionTape {
    Mat<Scalar> gates;       // 4h x TB, post-activation
    Mat<Scalar> cells;       // h x TB
    Mat<Scalar> tanh_cells;  // h x TB
};

template <typename Scalar>
struct LayerTape {
    Mat<Scalar> input;   // i x TB
    Mat<Scalar> hidden;  // 2h x TB, forward rows then backward rows, before dropout
    Mat<Scalar> output;  // 2h x TB after dropout
    Mat<Scalar> mask;    // 2h x TB inverted-dropout scale, empty when unused
    DirectionTape<Scalar> dirs[2];
};

template <typename Scalar>
struct ForwardTape {
    int steps = 0;
    int batch = 0;
    Mode mode = Mode::Eval;
    std::vector<LayerTape<Scalar>> layers;
    Mat<Scalar> z;        // 2h x B
    Mat<Scalar> fcn_pre;  // h x B
    Mat<Scalar> fcn_act;  // h x B
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> logits;
};

/// Dropout masks per layer (2h x TB). Used to replay a train-mode pass exactly.
template <typename Scalar>
using DropoutMasks = std::vector<Mat<Scalar>>;

template <typename Scalar>
DropoutMasks<Scalar> draw_dropout_masks(const ModelArchitecture& arch, int steps, int batch, Rng& rng);

/// One bidirectional layer over a batch. `mask` may be null (no dropout). Fills
/// `tape` and returns nothing; the layer output is `tape.output`.
template <typename Scalar>
void blstm_layer_forward(const ModelParams<Scalar>& params, int layer, const Mat<Scalar>& input, int steps,
                         int batch, const Mat<Scalar>* mask, LayerTape<Scalar>& tape);

/// Single-sequence convenience form: X is T x i, result is T x 2h.
template <typename Scalar>
RowMat<Scalar> blstm_layer_forward(const ModelParams<Scalar>& params, int layer, const RowMat<Scalar>& x,
                                   const RowMat<Scalar>* mask = nullptr);

/// Runs the whole network. In train mode with dropout > 0, masks are taken from
/// `masks` when given, otherwise drawn from `rng`. Throws NumericalDivergence
/// naming the layer and timestep of the first non-finite activation.
template <typename Scalar>
ForwardTape<Scalar> model_forward(const ModelParams<Scalar>& params, const SequenceBatch<Scalar>& input, Mode mode,
                                  Rng* rng = nullptr, const DropoutMasks<Scalar>* masks = nullptr);

/// Logit of a single T x 18 sequence in eval mode.
template <typename Scalar>
Scalar model_logit(const ModelParams<Scalar>& params, const FrameMatrix& sequence);

/// Gradients of a scalar loss given dLoss/dlogit per batch column.
template <typename Scalar>
ModelParams<Scalar> model_backward(const ModelParams<Scalar>& params, const ForwardTape<Scalar>& tape,
                                   std::span<const Scalar> dlogits);

struct Prediction {
    double probability = 0.5;
    Label label = Label::Lame;
};

double sigmoid(double x) noexcept;
/// Lame iff sigmoid(logit) >= 0.5, decided on the logit sign to avoid rounding at the boundary.
Prediction predict(double logit) noexcept;

} // namespace gaitseq
