#include "gaitseq/model.hpp"

#include "gaitseq/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gaitseq {

std::string_view to_string(FcnActivation a) noexcept {
    return a == FcnActivation::Tanh ? "tanh" : "relu";
}

std::optional<FcnActivation> parse_fcn_activation(std::string_view text) {
    if (text == "relu") return FcnActivation::Relu;
    if (text == "tanh") return FcnActivation::Tanh;
    return std::nullopt;
}

void ModelArchitecture::validate() const {
    if (num_layers < 1) throw std::invalid_argument("architecture needs at least one layer");
    if (hidden < 1) throw std::invalid_argument("hidden size must be positive");
    if (input_dim < 1) throw std::invalid_argument("input dimension must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
}

std::string ModelArchitecture::shape_string() const {
    return std::to_string(num_layers) + "x" + std::to_string(hidden);
}

ModelArchitecture ModelArchitecture::parse(std::string_view text) {
    const auto x = text.find('x');
    if (x == std::string_view::npos || x == 0 || x + 1 == text.size()) {
        throw std::invalid_argument("architecture must look like LxH, got \"" + std::string(text) + "\"");
    }
    ModelArchitecture arch;
    try {
        std::size_t used = 0;
        const std::string layers(text.substr(0, x));
        const std::string hidden(text.substr(x + 1));
        arch.num_layers = std::stoi(layers, &used);
        if (used != layers.size()) throw std::invalid_argument("");
        arch.hidden = std::stoi(hidden, &used);
        if (used != hidden.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw std::invalid_argument("architecture must look like LxH, got \"" + std::string(text) + "\"");
    }
    arch.validate();
    return arch;
}

std::size_t param_count(const ModelArchitecture& arch) {
    const std::size_t h = static_cast<std::size_t>(arch.hidden);
    std::size_t total = 0;
    for (int l = 0; l < arch.num_layers; ++l) {
        const std::size_t in = l == 0 ? static_cast<std::size_t>(arch.input_dim) : 2 * h;
        total += 2 * 4 * (h * (in + h) + h);
    }
    return total + (2 * h * h + h) + (h + 1);
}

ParamLayout::ParamLayout(const ModelArchitecture& arch) {
    const int h = arch.hidden;
    std::size_t offset = 0;
    layers.resize(static_cast<std::size_t>(arch.num_layers));
    for (int l = 0; l < arch.num_layers; ++l) {
        const int in = l == 0 ? arch.input_dim : 2 * h;
        for (auto& d : layers[static_cast<std::size_t>(l)]) {
            d.input = in;
            d.hidden = h;
            d.w = offset;
            offset += static_cast<std::size_t>(4 * h) * static_cast<std::size_t>(in);
            d.u = offset;
            offset += static_cast<std::size_t>(4 * h) * static_cast<std::size_t>(h);
            d.b = offset;
            offset += static_cast<std::size_t>(4 * h);
        }
    }
    w1 = offset;
    offset += static_cast<std::size_t>(h) * static_cast<std::size_t>(2 * h);
    b1 = offset;
    offset += static_cast<std::size_t>(h);
    w2 = offset;
    offset += static_cast<std::size_t>(h);
    b2 = offset;
    offset += 1;
    total = offset;
}

std::vector<unsigned char> ParamLayout::decay_mask() const {
    std::vector<unsigned char> mask(total, 1);
    auto clear = [&](std::size_t from, std::size_t n) { std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(from), n, 0); };
    for (const auto& layer : layers) {
        for (const auto& d : layer) clear(d.b, static_cast<std::size_t>(4 * d.hidden));
    }
    clear(b1, w2 - b1);
    clear(b2, 1);
    return mask;
}

template <typename Scalar>
ModelParams<Scalar>::ModelParams(const ModelArchitecture& arch)
    : arch_(arch), layout_(arch), values_(layout_.total, Scalar(0)) {
    arch_.validate();
}

template <typename Scalar>
LstmDirectionView<Scalar> ModelParams<Scalar>::direction(int layer, Direction d) const {
    const auto& l = layout_.at(layer, d);
    const Scalar* base = values_.data();
    return {ConstMat(base + l.w, 4 * l.hidden, l.input), ConstMat(base + l.u, 4 * l.hidden, l.hidden),
            ConstVec(base + l.b, 4 * l.hidden)};
}

template <typename Scalar>
typename ModelParams<Scalar>::MutMat ModelParams<Scalar>::W(int layer, Direction d) {
    const auto& l = layout_.at(layer, d);
    return MutMat(values_.data() + l.w, 4 * l.hidden, l.input);
}

template <typename Scalar>
typename ModelParams<Scalar>::MutMat ModelParams<Scalar>::U(int layer, Direction d) {
    const auto& l = layout_.at(layer, d);
    return MutMat(values_.data() + l.u, 4 * l.hidden, l.hidden);
}

template <typename Scalar>
typename ModelParams<Scalar>::MutVec ModelParams<Scalar>::b(int layer, Direction d) {
    const auto& l = layout_.at(layer, d);
    return MutVec(values_.data() + l.b, 4 * l.hidden);
}

template <typename Scalar>
typename ModelParams<Scalar>::MutMat ModelParams<Scalar>::W1() {
    return MutMat(values_.data() + layout_.w1, arch_.hidden, 2 * arch_.hidden);
}
template <typename Scalar>
typename ModelParams<Scalar>::MutVec ModelParams<Scalar>::b1() {
    return MutVec(values_.data() + layout_.b1, arch_.hidden);
}
template <typename Scalar>
typename ModelParams<Scalar>::MutMat ModelParams<Scalar>::W2() {
    return MutMat(values_.data() + layout_.w2, 1, arch_.hidden);
}
template <typename Scalar>
typename ModelParams<Scalar>::MutVec ModelParams<Scalar>::b2() {
    return MutVec(values_.data() + layout_.b2, 1);
}
template <typename Scalar>
typename ModelParams<Scalar>::ConstMat ModelParams<Scalar>::W1() const {
    return ConstMat(values_.data() + layout_.w1, arch_.hidden, 2 * arch_.hidden);
}
template <typename Scalar>
typename ModelParams<Scalar>::ConstVec ModelParams<Scalar>::b1() const {
    return ConstVec(values_.data() + layout_.b1, arch_.hidden);
}
template <typename Scalar>
typename ModelParams<Scalar>::ConstMat ModelParams<Scalar>::W2() const {
    return ConstMat(values_.data() + layout_.w2, 1, arch_.hidden);
}
template <typename Scalar>
typename ModelParams<Scalar>::ConstVec ModelParams<Scalar>::b2() const {
    return ConstVec(values_.data() + layout_.b2, 1);
}

template <typename Scalar>
void ModelParams<Scalar>::set_zero() {
    std::fill(values_.begin(), values_.end(), Scalar(0));
}

template <typename Scalar>
ModelParams<Scalar> init_params(const ModelArchitecture& arch, Rng& rng) {
    ModelParams<Scalar> params(arch);
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch.hidden));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Scalar& v : params.values()) v = static_cast<Scalar>(dist(rng));
    return params;
}

template <typename Scalar>
SequenceBatch<Scalar> SequenceBatch<Scalar>::pack(std::span<const FrameMatrix> sequences) {
    if (sequences.empty()) throw std::invalid_argument("cannot pack an empty batch");
    SequenceBatch out;
    out.steps = static_cast<int>(sequences.front().rows());
    out.batch = static_cast<int>(sequences.size());
    const Eigen::Index dim = sequences.front().cols();
    out.x.resize(dim, static_cast<Eigen::Index>(out.steps) * out.batch);
    for (int b = 0; b < out.batch; ++b) {
        const FrameMatrix& s = sequences[static_cast<std::size_t>(b)];
        if (s.rows() != out.steps || s.cols() != dim) throw std::invalid_argument("batch sequences differ in shape");
        for (int t = 0; t < out.steps; ++t) {
            out.x.col(static_cast<Eigen::Index>(t) * out.batch + b) = s.row(t).transpose().template cast<Scalar>();
        }
    }
    return out;
}

template <typename Scalar>
SequenceBatch<Scalar> SequenceBatch<Scalar>::pack(const FrameMatrix& sequence) {
    return pack(std::span<const FrameMatrix>(&sequence, 1));
}

namespace {

template <typename Derived>
auto sigmoid_array(const Eigen::ArrayBase<Derived>& x) {
    using S = typename Derived::Scalar;
    return S(1) / (S(1) + (-x).exp());
}

} // namespace

template <typename Scalar>
CellState<Scalar> lstm_cell_forward(const Vec<Scalar>& x, const Vec<Scalar>& h_prev, const Vec<Scalar>& c_prev,
                                    const LstmDirectionView<Scalar>& p) {
    const int h = p.hidden();
    if (x.size() != p.W.cols() || h_prev.size() != h || c_prev.size() != h) {
        throw std::invalid_argument("lstm_cell_forward: shape mismatch");
    }
    const Vec<Scalar> pre = p.W * x + p.U * h_prev + p.b;
    const auto i = sigmoid_array(pre.segment(0, h).array());
    const auto f = sigmoid_array(pre.segment(h, h).array());
    const auto g = pre.segment(2 * h, h).array().tanh();
    const auto o = sigmoid_array(pre.segment(3 * h, h).array());
    CellState<Scalar> out;
    out.c = (f * c_prev.array() + i * g).matrix();
    out.h = (o * out.c.array().tanh()).matrix();
    return out;
}

template <typename Scalar>
DropoutMasks<Scalar> draw_dropout_masks(const ModelArchitecture& arch, int steps, int batch, Rng& rng) {
    DropoutMasks<Scalar> masks;
    const double keep = 1.0 - arch.dropout_rate;
    std::bernoulli_distribution bern(keep);
    const Scalar scale = static_cast<Scalar>(1.0 / keep);
    for (int l = 0; l < arch.num_layers; ++l) {
        Mat<Scalar> m(2 * arch.hidden, static_cast<Eigen::Index>(steps) * batch);
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = bern(rng) ? scale : Scalar(0);
        }
        masks.push_back(std::move(m));
    }
    return masks;
}

namespace {

template <typename Scalar>
void direction_forward(const LstmDirectionView<Scalar>& p, const Mat<Scalar>& input, int steps, int batch,
                       bool reverse, DirectionTape<Scalar>& tape, Eigen::Block<Mat<Scalar>> hidden_out) {
    const int h = p.hidden();
    const Eigen::Index cols = static_cast<Eigen::Index>(steps) * batch;
    tape.gates.resize(4 * h, cols);
    tape.gates.noalias() = p.W * input;
    tape.gates.colwise() += p.b;
    tape.cells.resize(h, cols);
    tape.tanh_cells.resize(h, cols);

    Mat<Scalar> pre(4 * h, batch);
    for (int k = 0; k < steps; ++k) {
        const int t = reverse ? steps - 1 - k : k;
        const int prev = reverse ? t + 1 : t - 1;
        const Eigen::Index col = static_cast<Eigen::Index>(t) * batch;
        const Eigen::Index pcol = static_cast<Eigen::Index>(prev) * batch;
        auto gates = tape.gates.middleCols(col, batch);
        if (k > 0) {
            pre.noalias() = p.U * hidden_out.middleCols(pcol, batch);
            gates += pre;
        }
        gates.topRows(2 * h) = sigmoid_array(gates.topRows(2 * h).array()).matrix();
        gates.middleRows(2 * h, h) = gates.middleRows(2 * h, h).array().tanh().matrix();
        gates.bottomRows(h) = sigmoid_array(gates.bottomRows(h).array()).matrix();

        auto c = tape.cells.middleCols(col, batch);
        c = (gates.middleRows(0, h).array() * gates.middleRows(2 * h, h).array()).matrix();
        if (k > 0) c.array() += gates.middleRows(h, h).array() * tape.cells.middleCols(pcol, batch).array();
        auto tc = tape.tanh_cells.middleCols(col, batch);
        tc = c.array().tanh().matrix();
        hidden_out.middleCols(col, batch) = (gates.bottomRows(h).array() * tc.array()).matrix();
    }
}

template <typename Scalar>
void check_finite(const Mat<Scalar>& m, int batch, int layer, const char* what) {
    if (m.allFinite()) return;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (!m.col(c).allFinite()) {
            throw NumericalDivergence("numerical divergence: non-finite " + std::string(what) + " at layer " +
                                      std::to_string(layer) + ", timestep " + std::to_string(c / batch));
        }
    }
}

template <typename Scalar>
Mat<Scalar> activate(const Mat<Scalar>& pre, FcnActivation a) {
    if (a == FcnActivation::Tanh) return pre.array().tanh().matrix();
    return pre.cwiseMax(Scalar(0));
}

} // namespace

template <typename Scalar>
void blstm_layer_forward(const ModelParams<Scalar>& params, int layer, const Mat<Scalar>& input, int steps,
                         int batch, const Mat<Scalar>* mask, LayerTape<Scalar>& tape) {
    const int h = params.arch().hidden;
    const auto fwd = params.direction(layer, Direction::Forward);
    const auto bwd = params.direction(layer, Direction::Backward);
    const Eigen::Index cols = static_cast<Eigen::Index>(steps) * batch;
    if (steps < 1 || batch < 1 || input.rows() != fwd.W.cols() || input.cols() != cols) {
        throw std::invalid_argument("blstm_layer_forward: shape mismatch at layer " + std::to_string(layer));
    }
    if (mask && (mask->rows() != 2 * h || mask->cols() != cols)) {
        throw std::invalid_argument("blstm_layer_forward: dropout mask shape mismatch");
    }
    tape.input = input;
    tape.hidden.resize(2 * h, cols);
    direction_forward(fwd, input, steps, batch, false, tape.dirs[0], tape.hidden.topRows(h));
    direction_forward(bwd, input, steps, batch, true, tape.dirs[1], tape.hidden.bottomRows(h));
    if (mask) {
        tape.mask = *mask;
        tape.output = tape.hidden.cwiseProduct(*mask);
    } else {
        tape.mask.resize(0, 0);
        tape.output = tape.hidden;
    }
}

template <typename Scalar>
RowMat<Scalar> blstm_layer_forward(const ModelParams<Scalar>& params, int layer, const RowMat<Scalar>& x,
                                   const RowMat<Scalar>* mask) {
    const int steps = static_cast<int>(x.rows());
    Mat<Scalar> input = x.transpose();
    LayerTape<Scalar> tape;
    Mat<Scalar> m;
    if (mask) m = mask->transpose();
    blstm_layer_forward(params, layer, input, steps, 1, mask ? &m : nullptr, tape);
    return tape.output.transpose();
}

template <typename Scalar>
ForwardTape<Scalar> model_forward(const ModelParams<Scalar>& params, const SequenceBatch<Scalar>& input, Mode mode,
                                  Rng* rng, const DropoutMasks<Scalar>* masks) {
    const ModelArchitecture& arch = params.arch();
    const int h = arch.hidden;
    const int steps = input.steps;
    const int batch = input.batch;
    if (input.x.rows() != arch.input_dim) throw std::invalid_argument("model_forward: input dimension mismatch");
    if (!input.x.allFinite()) throw std::invalid_argument("model_forward: non-finite input");

    DropoutMasks<Scalar> drawn;
    if (mode == Mode::Train && arch.dropout_rate > 0.0 && !masks) {
        if (!rng) throw std::invalid_argument("model_forward: train mode with dropout needs an rng or masks");
        drawn = draw_dropout_masks<Scalar>(arch, steps, batch, *rng);
        masks = &drawn;
    }
    const bool use_masks = mode == Mode::Train && masks && !masks->empty();
    if (use_masks && masks->size() != static_cast<std::size_t>(arch.num_layers)) {
        throw std::invalid_argument("model_forward: one dropout mask per layer required");
    }

    ForwardTape<Scalar> tape;
    tape.steps = steps;
    tape.batch = batch;
    tape.mode = mode;
    tape.layers.resize(static_cast<std::size_t>(arch.num_layers));
    for (int l = 0; l < arch.num_layers; ++l) {
        const Mat<Scalar>& in = l == 0 ? input.x : tape.layers[static_cast<std::size_t>(l - 1)].output;
        const Mat<Scalar>* mask = use_masks ? &(*masks)[static_cast<std::size_t>(l)] : nullptr;
        blstm_layer_forward(params, l, in, steps, batch, mask, tape.layers[static_cast<std::size_t>(l)]);
        check_finite(tape.layers[static_cast<std::size_t>(l)].hidden, batch, l, "hidden state");
    }

    const Mat<Scalar>& last = tape.layers.back().output;
    tape.z.resize(2 * h, batch);
    tape.z.topRows(h) = last.block(0, static_cast<Eigen::Index>(steps - 1) * batch, h, batch);
    tape.z.bottomRows(h) = last.block(h, 0, h, batch);
    tape.fcn_pre = params.W1() * tape.z;
    tape.fcn_pre.colwise() += params.b1();
    tape.fcn_act = activate(tape.fcn_pre, arch.fcn_activation);
    tape.logits = params.W2() * tape.fcn_act;
    tape.logits.array() += params.b2()(0);
    if (!tape.logits.allFinite()) {
        throw NumericalDivergence("numerical divergence: non-finite logit in classification head");
    }
    return tape;
}

template <typename Scalar>
Scalar model_logit(const ModelParams<Scalar>& params, const FrameMatrix& sequence) {
    return model_forward(params, SequenceBatch<Scalar>::pack(sequence), Mode::Eval).logits(0);
}

namespace {

/// BPTT through one direction. `dhidden` is dLoss/dh for this direction's
/// outputs (h x TB); accumulates into the parameter gradients and `dinput`.
template <typename Scalar>
void direction_backward(const LstmDirectionView<Scalar>& p, const DirectionTape<Scalar>& tape,
                        const Mat<Scalar>& input, const Mat<Scalar>& hidden, const Mat<Scalar>& dhidden, int steps,
                        int batch, bool reverse, Eigen::Map<RowMat<Scalar>> dW, Eigen::Map<RowMat<Scalar>> dU,
                        Eigen::Map<Vec<Scalar>> db, Mat<Scalar>& dinput) {
    const int h = p.hidden();
    const Eigen::Index cols = static_cast<Eigen::Index>(steps) * batch;
    Mat<Scalar> dpre(4 * h, cols);
    Mat<Scalar> dh_rec = Mat<Scalar>::Zero(h, batch);
    Mat<Scalar> dc_next = Mat<Scalar>::Zero(h, batch);
    Mat<Scalar> dh(h, batch);
    Mat<Scalar> dc(h, batch);

    for (int k = steps - 1; k >= 0; --k) {
        const int t = reverse ? steps - 1 - k : k;
        const int prev = reverse ? t + 1 : t - 1;
        const Eigen::Index col = static_cast<Eigen::Index>(t) * batch;
        const auto gates = tape.gates.middleCols(col, batch);
        const auto i = gates.middleRows(0, h).array();
        const auto f = gates.middleRows(h, h).array();
        const auto g = gates.middleRows(2 * h, h).array();
        const auto o = gates.middleRows(3 * h, h).array();
        const auto tc = tape.tanh_cells.middleCols(col, batch).array();

        dh = dhidden.middleCols(col, batch) + dh_rec;
        dc = (dh.array() * o * (Scalar(1) - tc.square())).matrix() + dc_next;

        auto d = dpre.middleCols(col, batch);
        d.middleRows(0, h) = (dc.array() * g * i * (Scalar(1) - i)).matrix();
        d.middleRows(2 * h, h) = (dc.array() * i * (Scalar(1) - g.square())).matrix();
        d.middleRows(3 * h, h) = (dh.array() * tc * o * (Scalar(1) - o)).matrix();
        if (k > 0) {
            const auto c_prev = tape.cells.middleCols(static_cast<Eigen::Index>(prev) * batch, batch).array();
            d.middleRows(h, h) = (dc.array() * c_prev * f * (Scalar(1) - f)).matrix();
            dc_next = (dc.array() * f).matrix();
            dh_rec.noalias() = p.U.transpose() * d;
        } else {
            d.middleRows(h, h).setZero();
        }
    }

    if (steps > 1) {
        const Eigen::Index n = cols - batch;
        if (reverse) {
            dU.noalias() += dpre.leftCols(n) * hidden.rightCols(n).transpose();
        } else {
            dU.noalias() += dpre.rightCols(n) * hidden.leftCols(n).transpose();
        }
    }
    dW.noalias() += dpre * input.transpose();
    db += dpre.rowwise().sum();
    dinput.noalias() += p.W.transpose() * dpre;
}

} // namespace

template <typename Scalar>
ModelParams<Scalar> model_backward(const ModelParams<Scalar>& params, const ForwardTape<Scalar>& tape,
                                   std::span<const Scalar> dlogits) {
    const ModelArchitecture& arch = params.arch();
    const int h = arch.hidden;
    const int steps = tape.steps;
    const int batch = tape.batch;
    if (static_cast<int>(dlogits.size()) != batch || tape.layers.size() != static_cast<std::size_t>(arch.num_layers) ||
        tape.z.rows() != 2 * h) {
        throw std::invalid_argument("model_backward: tape does not match parameters");
    }
    ModelParams<Scalar> grads(arch);
    // Owned copy: reductions over caller memory would depend on its alignment.
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> dlogit =
        Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(dlogits.data(), batch);

    grads.W2().noalias() += dlogit * tape.fcn_act.transpose();
    grads.b2()(0) += dlogit.sum();
    Mat<Scalar> dpre1 = params.W2().transpose() * dlogit;
    if (arch.fcn_activation == FcnActivation::Tanh) {
        dpre1.array() *= Scalar(1) - tape.fcn_act.array().square();
    } else {
        dpre1.array() *= (tape.fcn_pre.array() > Scalar(0)).template cast<Scalar>();
    }
    grads.W1().noalias() += dpre1 * tape.z.transpose();
    grads.b1() += dpre1.rowwise().sum();
    const Mat<Scalar> dz = params.W1().transpose() * dpre1;

    const Eigen::Index cols = static_cast<Eigen::Index>(steps) * batch;
    Mat<Scalar> doutput = Mat<Scalar>::Zero(2 * h, cols);
    doutput.block(0, static_cast<Eigen::Index>(steps - 1) * batch, h, batch) = dz.topRows(h);
    doutput.block(h, 0, h, batch) += dz.bottomRows(h);

    for (int l = arch.num_layers - 1; l >= 0; --l) {
        const LayerTape<Scalar>& lt = tape.layers[static_cast<std::size_t>(l)];
        if (lt.mask.size() > 0) doutput.array() *= lt.mask.array();
        Mat<Scalar> dinput = Mat<Scalar>::Zero(lt.input.rows(), cols);
        for (int d = 0; d < 2; ++d) {
            const Direction dir = d == 0 ? Direction::Forward : Direction::Backward;
            const Mat<Scalar> dhid = doutput.middleRows(d * h, h);
            const Mat<Scalar> hid = lt.hidden.middleRows(d * h, h);
            direction_backward(params.direction(l, dir), lt.dirs[d], lt.input, hid, dhid, steps, batch, d == 1,
                               grads.W(l, dir), grads.U(l, dir), grads.b(l, dir), dinput);
        }
        doutput = std::move(dinput);
    }
    return grads;
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Prediction predict(double logit) noexcept {
    const double p = sigmoid(logit);
    return {p, logit >= 0.0 ? Label::Lame : Label::Normal};
}

#define GAITSEQ_INSTANTIATE(S)                                                                                        \
    template class ModelParams<S>;                                                                                    \
    template struct SequenceBatch<S>;                                                                                 \
    template ModelParams<S> init_params<S>(const ModelArchitecture&, Rng&);                                           \
    template CellState<S> lstm_cell_forward<S>(const Vec<S>&, const Vec<S>&, const Vec<S>&,                           \
                                               const LstmDirectionView<S>&);                                          \
    template DropoutMasks<S> draw_dropout_masks<S>(const ModelArchitecture&, int, int, Rng&);                         \
    template void blstm_layer_forward<S>(const ModelParams<S>&, int, const Mat<S>&, int, int, const Mat<S>*,          \
                                         LayerTape<S>&);                                                              \
    template RowMat<S> blstm_layer_forward<S>(const ModelParams<S>&, int, const RowMat<S>&, const RowMat<S>*);        \
    template ForwardTape<S> model_forward<S>(const ModelParams<S>&, const SequenceBatch<S>&, Mode, Rng*,              \
                                             const DropoutMasks<S>*);                                                 \
    template S model_logit<S>(const ModelParams<S>&, const FrameMatrix&);                                             \
    template ModelParams<S> model_backward<S>(const ModelParams<S>&, const ForwardTape<S>&, std::span<const S>);

GAITSEQ_INSTANTIATE(float)
GAITSEQ_INSTANTIATE(double)

#undef GAITSEQ_INSTANTIATE

} // namespace gaitseq
