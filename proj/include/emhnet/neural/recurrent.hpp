#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emhnet/error.hpp"
#include "emhnet/neural/init.hpp"
#include "emhnet/neural/linalg.hpp"
#include "emhnet/neural/loss.hpp"
#include "emhnet/random.hpp"
#include "emhnet/series.hpp"

namespace emhnet {

enum class CellKind { basic, lstm, gru };

inline std::string_view to_string(CellKind k) {
    switch (k) {
        case CellKind::basic: return "basic";
        case CellKind::lstm: return "lstm";
        case CellKind::gru: return "gru";
    }
    return "?";
}

inline CellKind parse_cell_kind(std::string_view text) {
    if (text == "basic" || text == "rnn") return CellKind::basic;
    if (text == "lstm") return CellKind::lstm;
    if (text == "gru") return CellKind::gru;
    throw ConfigError("unknown cell kind '" + std::string(text) + "'");
}

/// Number of stacked pre-activation blocks per cell.
///   basic: h' = tanh(W_i x + W_r h + b)
///   lstm:  blocks (input, forget, candidate, output)
///   gru:   blocks (update, reset, candidate)
inline std::size_t gate_count(CellKind k) {
    switch (k) {
        case CellKind::basic: return 1;
        case CellKind::lstm: return 4;
        case CellKind::gru: return 3;
    }
    return 1;
}

/// Stacked recurrent network on a scalar input sequence with an affine
/// readout of the top layer.
///
/// Per layer l (input width d = 1 for l = 0, else hidden):
///   W_i: (G*H x d), W_r: (G*H x H), b_h: (G*H)
/// then the readout W_y: (H), b_y: (1).
struct RecurrentShape {
    CellKind kind = CellKind::basic;
    std::size_t layers = 1;
    std::size_t hidden = 32;

    [[nodiscard]] std::size_t gates() const { return gate_count(kind); }
    [[nodiscard]] std::size_t input_width(std::size_t l) const { return l == 0 ? 1 : hidden; }
    [[nodiscard]] std::size_t layer_size(std::size_t l) const {
        return gates() * hidden * (input_width(l) + hidden + 1);
    }
    [[nodiscard]] std::size_t layer_offset(std::size_t l) const {
        std::size_t off = 0;
        for (std::size_t k = 0; k < l; ++k) off += layer_size(k);
        return off;
    }
    [[nodiscard]] std::size_t input_weight_offset(std::size_t l) const { return layer_offset(l); }
    [[nodiscard]] std::size_t recurrent_weight_offset(std::size_t l) const {
        return layer_offset(l) + gates() * hidden * input_width(l);
    }
    [[nodiscard]] std::size_t bias_offset(std::size_t l) const {
        return recurrent_weight_offset(l) + gates() * hidden * hidden;
    }
    [[nodiscard]] std::size_t readout_offset() const { return layer_offset(layers); }
    [[nodiscard]] std::size_t readout_bias_offset() const { return readout_offset() + hidden; }
    [[nodiscard]] std::size_t parameter_count() const { return readout_offset() + hidden + 1; }

    void check() const {
        if (layers == 0) throw ShapeError("recurrent network needs at least one layer");
        if (hidden == 0) throw ShapeError("recurrent hidden width must be positive");
    }

    [[nodiscard]] std::string parameter_name(std::size_t index) const {
        for (std::size_t l = 0; l < layers; ++l) {
            const std::string prefix = "layer" + std::to_string(l);
            if (index < recurrent_weight_offset(l) && index >= input_weight_offset(l))
                return prefix + ".W_i[" + std::to_string(index - input_weight_offset(l)) + "]";
            if (index < bias_offset(l) && index >= recurrent_weight_offset(l))
                return prefix + ".W_r[" + std::to_string(index - recurrent_weight_offset(l)) + "]";
            if (index < layer_offset(l + 1) && index >= bias_offset(l))
                return prefix + ".b_h[" + std::to_string(index - bias_offset(l)) + "]";
        }
        if (index < readout_bias_offset()) return "W_y[" + std::to_string(index - readout_offset()) + "]";
        if (index == readout_bias_offset()) return "b_y";
        return "param[" + std::to_string(index) + "]";
    }

    friend bool operator==(const RecurrentShape&, const RecurrentShape&) = default;
};

struct RecurrentParams {
    RecurrentShape shape;
    std::vector<double> values;

    static RecurrentParams zeros(RecurrentShape shape) {
        shape.check();
        RecurrentParams p{shape, {}};
        p.values.assign(shape.parameter_count(), 0.0);
        return p;
    }

    /// Weights uniform in +-1/sqrt(fan_in) with fan_in = d + H per gate
    /// (H for the readout); biases zero.
    static RecurrentParams random(RecurrentShape shape, std::uint64_t seed) {
        RecurrentParams p = zeros(shape);
        Rng rng(seed);
        for (std::size_t l = 0; l < shape.layers; ++l) {
            const std::size_t fan_in = shape.input_width(l) + shape.hidden;
            detail::fill_uniform_fan_in(p.input_weights(l), fan_in, rng);
            detail::fill_uniform_fan_in(p.recurrent_weights(l), fan_in, rng);
        }
        detail::fill_uniform_fan_in(p.readout_weights(), shape.hidden, rng);
        return p;
    }

    std::span<double> input_weights(std::size_t l) {
        return {values.data() + shape.input_weight_offset(l), shape.gates() * shape.hidden * shape.input_width(l)};
    }
    std::span<double> recurrent_weights(std::size_t l) {
        return {values.data() + shape.recurrent_weight_offset(l), shape.gates() * shape.hidden * shape.hidden};
    }
    std::span<double> hidden_bias(std::size_t l) {
        return {values.data() + shape.bias_offset(l), shape.gates() * shape.hidden};
    }
    std::span<double> readout_weights() { return {values.data() + shape.readout_offset(), shape.hidden}; }
    double& readout_bias() { return values[shape.readout_bias_offset()]; }
};

/// Hidden state of one layer; `cell` is used by LSTM only.
struct CellState {
    std::vector<double> hidden;
    std::vector<double> cell;
};

namespace detail {

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

/// One cell step of layer l. Reads x (d), h (H), c (H); writes h_out, c_out
/// and the post-activation gate blocks (G*H).
inline void cell_step_raw(const RecurrentShape& shape, const double* values, std::size_t l, const double* x,
                          const double* h, const double* c, double* h_out, double* c_out, double* gates) {
    const std::size_t H = shape.hidden, d = shape.input_width(l), G = shape.gates();
    const double* wi = values + shape.input_weight_offset(l);
    const double* wr = values + shape.recurrent_weight_offset(l);
    const double* b = values + shape.bias_offset(l);
    for (std::size_t k = 0; k < G * H; ++k) gates[k] = b[k];
    gemv_add(gates, wi, x, G * H, d);
    switch (shape.kind) {
        case CellKind::basic: {
            gemv_add(gates, wr, h, H, H);
            for (std::size_t k = 0; k < H; ++k) {
                gates[k] = std::tanh(gates[k]);
                h_out[k] = gates[k];
                c_out[k] = 0.0;
            }
            break;
        }
        case CellKind::lstm: {
            gemv_add(gates, wr, h, 4 * H, H);
            double* ig = gates;
            double* fg = gates + H;
            double* gg = gates + 2 * H;
            double* og = gates + 3 * H;
            for (std::size_t k = 0; k < H; ++k) {
                ig[k] = sigmoid(ig[k]);
                fg[k] = sigmoid(fg[k]);
                gg[k] = std::tanh(gg[k]);
                og[k] = sigmoid(og[k]);
                c_out[k] = fg[k] * c[k] + ig[k] * gg[k];
                h_out[k] = og[k] * std::tanh(c_out[k]);
            }
            break;
        }
        case CellKind::gru: {
            // Update and reset gates see h; the candidate sees r * h.
            gemv_add(gates, wr, h, 2 * H, H);
            double* zg = gates;
            double* rg = gates + H;
            double* ng = gates + 2 * H;
            thread_local std::vector<double> rh;
            rh.resize(H);
            for (std::size_t k = 0; k < H; ++k) {
                zg[k] = sigmoid(zg[k]);
                rg[k] = sigmoid(rg[k]);
                rh[k] = rg[k] * h[k];
            }
            gemv_add(ng, wr + 2 * H * H, rh.data(), H, H);
            for (std::size_t k = 0; k < H; ++k) {
                ng[k] = std::tanh(ng[k]);
                h_out[k] = (1.0 - zg[k]) * h[k] + zg[k] * ng[k];
                c_out[k] = 0.0;
            }
            break;
        }
    }
}

/// Backward through one cell step. Given dh_out and dc_out, accumulates
/// parameter gradients and writes dx (d), dh (H), dc (H).
inline void cell_backward_raw(const RecurrentShape& shape, const double* values, std::size_t l, const double* x,
                              const double* h, const double* c, const double* c_new, const double* gates,
                              const double* dh_out, const double* dc_out, double* grad, double* dx, double* dh,
                              double* dc) {
    const std::size_t H = shape.hidden, d = shape.input_width(l), G = shape.gates();
    const double* wi = values + shape.input_weight_offset(l);
    const double* wr = values + shape.recurrent_weight_offset(l);
    double* gwi = grad + shape.input_weight_offset(l);
    double* gwr = grad + shape.recurrent_weight_offset(l);
    double* gb = grad + shape.bias_offset(l);
    thread_local std::vector<double> da;
    da.assign(G * H, 0.0);
    std::fill(dx, dx + d, 0.0);
    std::fill(dh, dh + H, 0.0);
    std::fill(dc, dc + H, 0.0);

    switch (shape.kind) {
        case CellKind::basic: {
            for (std::size_t k = 0; k < H; ++k) da[k] = dh_out[k] * (1.0 - gates[k] * gates[k]);
            ger_add(gwr, da.data(), h, H, H);
            gemv_t_add(dh, wr, da.data(), H, H);
            break;
        }
        case CellKind::lstm: {
            const double* ig = gates;
            const double* fg = gates + H;
            const double* gg = gates + 2 * H;
            const double* og = gates + 3 * H;
            for (std::size_t k = 0; k < H; ++k) {
                const double tc = std::tanh(c_new[k]);
                const double dct = dc_out[k] + dh_out[k] * og[k] * (1.0 - tc * tc);
                da[k] = dct * gg[k] * ig[k] * (1.0 - ig[k]);
                da[H + k] = dct * c[k] * fg[k] * (1.0 - fg[k]);
                da[2 * H + k] = dct * ig[k] * (1.0 - gg[k] * gg[k]);
                da[3 * H + k] = dh_out[k] * tc * og[k] * (1.0 - og[k]);
                dc[k] = dct * fg[k];
            }
            ger_add(gwr, da.data(), h, 4 * H, H);
            gemv_t_add(dh, wr, da.data(), 4 * H, H);
            break;
        }
        case CellKind::gru: {
            const double* zg = gates;
            const double* rg = gates + H;
            const double* ng = gates + 2 * H;
            thread_local std::vector<double> rh, drh;
            rh.resize(H);
            drh.assign(H, 0.0);
            for (std::size_t k = 0; k < H; ++k) {
                rh[k] = rg[k] * h[k];
                dh[k] = dh_out[k] * (1.0 - zg[k]);
                da[k] = dh_out[k] * (ng[k] - h[k]) * zg[k] * (1.0 - zg[k]);
                da[2 * H + k] = dh_out[k] * zg[k] * (1.0 - ng[k] * ng[k]);
            }
            const double* wr_n = wr + 2 * H * H;
            ger_add(gwr + 2 * H * H, da.data() + 2 * H, rh.data(), H, H);
            gemv_t_add(drh.data(), wr_n, da.data() + 2 * H, H, H);
            for (std::size_t k = 0; k < H; ++k) {
                dh[k] += drh[k] * rg[k];
                da[H + k] = drh[k] * h[k] * rg[k] * (1.0 - rg[k]);
            }
            ger_add(gwr, da.data(), h, 2 * H, H);
            gemv_t_add(dh, wr, da.data(), 2 * H, H);
            break;
        }
    }
    ger_add(gwi, da.data(), x, G * H, d);
    gemv_t_add(dx, wi, da.data(), G * H, d);
    for (std::size_t k = 0; k < G * H; ++k) gb[k] += da[k];
}

/// Per-layer activations of one unrolled sequence.
struct SequenceCache {
    std::size_t steps = 0;
    std::vector<std::vector<double>> inputs;  // [layer] steps x d
    std::vector<std::vector<double>> hidden;  // [layer] (steps + 1) x H, row 0 = initial state
    std::vector<std::vector<double>> cell;    // [layer] (steps + 1) x H
    std::vector<std::vector<double>> gates;   // [layer] steps x G*H
};

/// Runs the stack over `inputs`; prediction t reads out the top hidden state
/// after consuming input t.
inline void run_sequence(const RecurrentShape& shape, const double* values, std::span<const double> inputs,
                         SequenceCache& cache, double* pred) {
    const std::size_t T = inputs.size(), H = shape.hidden, G = shape.gates(), L = shape.layers;
    cache.steps = T;
    cache.inputs.resize(L);
    cache.hidden.resize(L);
    cache.cell.resize(L);
    cache.gates.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        cache.inputs[l].assign(T * shape.input_width(l), 0.0);
        cache.hidden[l].assign((T + 1) * H, 0.0);
        cache.cell[l].assign((T + 1) * H, 0.0);
        cache.gates[l].assign(T * G * H, 0.0);
    }
    const double* wy = values + shape.readout_offset();
    const double by = values[shape.readout_bias_offset()];
    for (std::size_t t = 0; t < T; ++t) {
        cache.inputs[0][t] = inputs[t];
        for (std::size_t l = 0; l < L; ++l) {
            const std::size_t d = shape.input_width(l);
            const double* x = l == 0 ? &cache.inputs[0][t] : cache.hidden[l - 1].data() + (t + 1) * H;
            if (l > 0) std::copy(x, x + d, cache.inputs[l].data() + t * d);
            cell_step_raw(shape, values, l, x, cache.hidden[l].data() + t * H, cache.cell[l].data() + t * H,
                          cache.hidden[l].data() + (t + 1) * H, cache.cell[l].data() + (t + 1) * H,
                          cache.gates[l].data() + t * G * H);
        }
        const double* top = cache.hidden[L - 1].data() + (t + 1) * H;
        double y = by;
        for (std::size_t k = 0; k < H; ++k) y += wy[k] * top[k];
        pred[t] = y;
    }
}

/// Backpropagation through time given d(loss)/d(pred_t).
inline void backprop_sequence(const RecurrentShape& shape, const double* values, const SequenceCache& cache,
                              std::span<const double> dpred, double* grad) {
    const std::size_t T = cache.steps, H = shape.hidden, G = shape.gates(), L = shape.layers;
    const double* wy = values + shape.readout_offset();
    double* gwy = grad + shape.readout_offset();
    double& gby = grad[shape.readout_bias_offset()];
    std::vector<std::vector<double>> dh_next(L, std::vector<double>(H, 0.0));
    std::vector<std::vector<double>> dc_next(L, std::vector<double>(H, 0.0));
    std::vector<double> dh_out(H), dx(H), dh(H), dc(H);
    std::vector<double> dbelow(H);
    for (std::size_t t = T; t-- > 0;) {
        const double g = dpred[t];
        const double* top = cache.hidden[L - 1].data() + (t + 1) * H;
        gby += g;
        for (std::size_t k = 0; k < H; ++k) gwy[k] += g * top[k];
        for (std::size_t k = 0; k < H; ++k) dbelow[k] = g * wy[k];
        for (std::size_t l = L; l-- > 0;) {
            const std::size_t d = shape.input_width(l);
            for (std::size_t k = 0; k < H; ++k) dh_out[k] = dh_next[l][k] + dbelow[k];
            cell_backward_raw(shape, values, l, cache.inputs[l].data() + t * d, cache.hidden[l].data() + t * H,
                              cache.cell[l].data() + t * H, cache.cell[l].data() + (t + 1) * H,
                              cache.gates[l].data() + t * G * H, dh_out.data(), dc_next[l].data(), grad, dx.data(),
                              dh.data(), dc.data());
            dh_next[l] = dh;
            dc_next[l] = dc;
            if (l > 0) std::copy(dx.begin(), dx.begin() + std::ptrdiff_t(d), dbelow.begin());
        }
    }
}

inline void check_params(const RecurrentParams& p) {
    p.shape.check();
    if (p.values.size() != p.shape.parameter_count())
        throw ShapeError("recurrent parameter vector has " + std::to_string(p.values.size()) + " values, expected " +
                         std::to_string(p.shape.parameter_count()));
}

}  // namespace detail

/// One step of layer `l` from `state`; returns the next state.
inline CellState cell_step(const RecurrentParams& params, std::size_t layer, std::span<const double> x,
                           const CellState& state) {
    detail::check_params(params);
    const auto& shape = params.shape;
    const std::size_t H = shape.hidden;
    if (layer >= shape.layers) throw ShapeError("layer index out of range");
    if (x.size() != shape.input_width(layer)) throw ShapeError("cell input has wrong width");
    if (state.hidden.size() != H) throw ShapeError("cell hidden state has wrong width");
    std::vector<double> c(H, 0.0);
    if (!state.cell.empty()) {
        if (state.cell.size() != H) throw ShapeError("cell memory has wrong width");
        c = state.cell;
    }
    CellState out{std::vector<double>(H), std::vector<double>(H)};
    std::vector<double> gates(shape.gates() * H);
    detail::cell_step_raw(shape, params.values.data(), layer, x.data(), state.hidden.data(), c.data(),
                          out.hidden.data(), out.cell.data(), gates.data());
    return out;
}

/// Predictions (row-major N x T) for every panel row. The input at row t is
/// the previous value x_{t-1}; the readout of the resulting hidden state
/// predicts the current value x_t. Initial states are zero.
inline std::vector<double> recurrent_forward(const RecurrentParams& params, const PaddedPanel& panel) {
    detail::check_params(params);
    const std::size_t N = panel.series_count(), T = panel.steps();
    std::vector<double> pred(N * T, 0.0);
    std::vector<double> inputs(T);
    detail::SequenceCache cache;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t t = 0; t < T; ++t) inputs[t] = panel.at(n, t, PaddedPanel::kPast);
        detail::run_sequence(params.shape, params.values.data(), inputs, cache, pred.data() + n * T);
    }
    return pred;
}

namespace detail {
inline void require_kind(const RecurrentParams& p, CellKind k) {
    if (p.shape.kind != k)
        throw ShapeError("expected " + std::string(to_string(k)) + " parameters, got " +
                         std::string(to_string(p.shape.kind)));
}
}  // namespace detail

inline std::vector<double> rnn_forward(const RecurrentParams& params, const PaddedPanel& panel) {
    detail::require_kind(params, CellKind::basic);
    return recurrent_forward(params, panel);
}

inline std::vector<double> lstm_forward(const RecurrentParams& params, const PaddedPanel& panel) {
    detail::require_kind(params, CellKind::lstm);
    return recurrent_forward(params, panel);
}

inline std::vector<double> gru_forward(const RecurrentParams& params, const PaddedPanel& panel) {
    detail::require_kind(params, CellKind::gru);
    return recurrent_forward(params, panel);
}

/// Panel-MSE objective; one sample is one series.
class RecurrentObjective {
public:
    RecurrentObjective(RecurrentShape shape, const PaddedPanel& panel, bool mask_padding)
        : shape_(shape), panel_(&panel), mask_(mask_padding) {
        shape_.check();
    }

    [[nodiscard]] std::size_t sample_count() const { return panel_->series_count(); }
    [[nodiscard]] std::size_t parameter_count() const { return shape_.parameter_count(); }
    [[nodiscard]] std::string parameter_name(std::size_t i) const { return shape_.parameter_name(i); }

    /// Panel MSE restricted to the series in `batch`; gradient written to `grad`.
    double loss_and_gradient(std::span<const double> params, std::span<const std::size_t> batch,
                             std::span<double> grad) const {
        std::fill(grad.begin(), grad.end(), 0.0);
        if (batch.empty()) return 0.0;
        const std::size_t T = panel_->steps();
        thread_local detail::SequenceCache cache;
        thread_local std::vector<double> inputs, pred, dpred;
        inputs.resize(T);
        pred.resize(T);
        dpred.resize(T);
        double loss = 0.0;
        for (auto n : batch) {
            for (std::size_t t = 0; t < T; ++t) inputs[t] = panel_->at(n, t, PaddedPanel::kPast);
            detail::run_sequence(shape_, params.data(), inputs, cache, pred.data());
            const std::size_t first = mask_ ? panel_->first_row(n) : 0;
            const std::size_t count = T - first;
            std::fill(dpred.begin(), dpred.end(), 0.0);
            if (count == 0) continue;
            const double scale = 1.0 / (double(count) * double(batch.size()));
            double acc = 0.0;
            for (std::size_t t = first; t < T; ++t) {
                const double r = pred[t] - panel_->at(n, t, PaddedPanel::kCurrent);
                acc += r * r;
                dpred[t] = 2.0 * r * scale;
            }
            loss += acc * scale;
            detail::backprop_sequence(shape_, params.data(), cache, dpred, grad.data());
        }
        return loss;
    }

private:
    RecurrentShape shape_;
    const PaddedPanel* panel_;
    bool mask_;
};

/// Gradient of the panel MSE over every series of `panel`.
inline std::pair<LossValue, RecurrentParams> recurrent_backward(const RecurrentParams& params, const PaddedPanel& panel,
                                                                bool mask_padding) {
    detail::check_params(params);
    RecurrentObjective obj(params.shape, panel, mask_padding);
    RecurrentParams grad = RecurrentParams::zeros(params.shape);
    std::vector<std::size_t> all(panel.series_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const double mse = obj.loss_and_gradient(params.values, all, grad.values);
    const auto pred = recurrent_forward(params, panel);
    return {LossValue{mse, panel_mse(pred, panel, mask_padding).sample_count}, std::move(grad)};
}

}  // namespace emhnet
