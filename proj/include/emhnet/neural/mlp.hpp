#pragma once

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

/// Layer widths from input to output: {m, hidden..., 1}. Hidden layers use
/// tanh, the output layer is affine.
struct MlpShape {
    std::vector<std::size_t> widths;

    static MlpShape make(std::size_t inputs, std::size_t hidden_layers, std::size_t hidden_width) {
        MlpShape s;
        s.widths.push_back(inputs);
        for (std::size_t i = 0; i < hidden_layers; ++i) s.widths.push_back(hidden_width);
        s.widths.push_back(1);
        return s;
    }

    [[nodiscard]] std::size_t layer_count() const { return widths.size() - 1; }
    [[nodiscard]] std::size_t inputs() const { return widths.front(); }

    /// Offset of layer l's weight matrix (widths[l+1] x widths[l]); its bias follows.
    [[nodiscard]] std::size_t weight_offset(std::size_t l) const {
        std::size_t off = 0;
        for (std::size_t k = 0; k < l; ++k) off += widths[k + 1] * (widths[k] + 1);
        return off;
    }
    [[nodiscard]] std::size_t bias_offset(std::size_t l) const { return weight_offset(l) + widths[l + 1] * widths[l]; }
    [[nodiscard]] std::size_t parameter_count() const { return weight_offset(layer_count()); }

    void check() const {
        if (widths.size() < 2) throw ShapeError("MLP needs at least an input and an output width");
        if (widths.back() != 1) throw ShapeError("MLP output width must be 1");
        for (auto w : widths)
            if (w == 0) throw ShapeError("MLP layer width must be positive");
    }

    [[nodiscard]] std::string parameter_name(std::size_t index) const {
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const std::size_t w0 = weight_offset(l), b0 = bias_offset(l), end = weight_offset(l + 1);
            if (index < b0) {
                const std::size_t k = index - w0;
                return "layer" + std::to_string(l) + ".weight[" + std::to_string(k / widths[l]) + "," +
                       std::to_string(k % widths[l]) + "]";
            }
            if (index < end) return "layer" + std::to_string(l) + ".bias[" + std::to_string(index - b0) + "]";
        }
        return "param[" + std::to_string(index) + "]";
    }

    friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

struct MlpParams {
    MlpShape shape;
    std::vector<double> values;

    static MlpParams zeros(MlpShape shape) {
        shape.check();
        MlpParams p{std::move(shape), {}};
        p.values.assign(p.shape.parameter_count(), 0.0);
        return p;
    }

    /// Weights uniform in +-1/sqrt(fan_in), biases zero.
    static MlpParams random(MlpShape shape, std::uint64_t seed) {
        MlpParams p = zeros(std::move(shape));
        Rng rng(seed);
        for (std::size_t l = 0; l < p.shape.layer_count(); ++l) {
            std::span<double> w(p.values.data() + p.shape.weight_offset(l), p.shape.widths[l + 1] * p.shape.widths[l]);
            detail::fill_uniform_fan_in(w, p.shape.widths[l], rng);
        }
        return p;
    }

    [[nodiscard]] std::span<double> weights(std::size_t l) {
        return {values.data() + shape.weight_offset(l), shape.widths[l + 1] * shape.widths[l]};
    }
    [[nodiscard]] std::span<double> bias(std::size_t l) { return {values.data() + shape.bias_offset(l), shape.widths[l + 1]}; }
};

namespace detail {

/// Forward pass on one row. `acts` (optional) receives the post-activation of
/// every layer, input first, laid out back to back.
inline double mlp_forward_raw(const MlpShape& shape, const double* values, const double* x, std::vector<double>* acts) {
    const std::size_t layers = shape.layer_count();
    thread_local std::vector<double> scratch;
    std::vector<double>& buf = acts ? *acts : scratch;
    std::size_t total = 0;
    for (auto w : shape.widths) total += w;
    buf.resize(total);
    std::copy(x, x + shape.widths[0], buf.begin());
    std::size_t in_off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = shape.widths[l], out = shape.widths[l + 1];
        const std::size_t out_off = in_off + in;
        double* z = buf.data() + out_off;
        const double* b = values + shape.bias_offset(l);
        for (std::size_t r = 0; r < out; ++r) z[r] = b[r];
        gemv_add(z, values + shape.weight_offset(l), buf.data() + in_off, out, in);
        if (l + 1 < layers)
            for (std::size_t r = 0; r < out; ++r) z[r] = std::tanh(z[r]);
        in_off = out_off;
    }
    return buf[total - 1];
}

/// Accumulates d(loss)/d(params) for one row given d(loss)/d(output).
inline void mlp_backward_raw(const MlpShape& shape, const double* values, const std::vector<double>& acts, double dout,
                             double* grad) {
    const std::size_t layers = shape.layer_count();
    thread_local std::vector<double> delta, next;
    std::size_t out_off = acts.size() - 1;
    delta.assign(1, dout);
    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = shape.widths[l], out = shape.widths[l + 1];
        const std::size_t in_off = out_off - in;
        const double* a_in = acts.data() + in_off;
        ger_add(grad + shape.weight_offset(l), delta.data(), a_in, out, in);
        double* gb = grad + shape.bias_offset(l);
        for (std::size_t r = 0; r < out; ++r) gb[r] += delta[r];
        if (l == 0) break;
        next.assign(in, 0.0);
        gemv_t_add(next.data(), values + shape.weight_offset(l), delta.data(), out, in);
        for (std::size_t c = 0; c < in; ++c) next[c] *= 1.0 - a_in[c] * a_in[c];
        std::swap(delta, next);
        out_off = in_off;
    }
}

}  // namespace detail

inline double mlp_forward(const MlpParams& params, std::span<const double> x) {
    if (params.values.size() != params.shape.parameter_count()) throw ShapeError("MLP parameter vector has wrong size");
    if (x.size() != params.shape.inputs())
        throw ShapeError("MLP input has " + std::to_string(x.size()) + " values, expected " +
                         std::to_string(params.shape.inputs()));
    return detail::mlp_forward_raw(params.shape, params.values.data(), x.data(), nullptr);
}

inline std::vector<double> mlp_predict(const MlpParams& params, const LagDataset& data) {
    if (data.lag_count != params.shape.inputs())
        throw ShapeError("dataset has " + std::to_string(data.lag_count) + " lags, MLP expects " +
                         std::to_string(params.shape.inputs()));
    std::vector<double> out(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) out[i] = mlp_forward(params, data.row(i));
    return out;
}

/// Stacked-MSE objective over rows of a lag dataset.
class MlpObjective {
public:
    MlpObjective(MlpShape shape, const LagDataset& data) : shape_(std::move(shape)), data_(&data) {
        shape_.check();
        if (data.lag_count != shape_.inputs()) throw ShapeError("dataset lag count does not match MLP input width");
    }

    [[nodiscard]] std::size_t sample_count() const { return data_->rows(); }
    [[nodiscard]] std::size_t parameter_count() const { return shape_.parameter_count(); }
    [[nodiscard]] std::string parameter_name(std::size_t i) const { return shape_.parameter_name(i); }

    /// Mean squared error over `batch`; the gradient is written (not added) to `grad`.
    double loss_and_gradient(std::span<const double> params, std::span<const std::size_t> batch,
                             std::span<double> grad) const {
        std::fill(grad.begin(), grad.end(), 0.0);
        if (batch.empty()) return 0.0;
        thread_local std::vector<double> acts;
        const double scale = 1.0 / double(batch.size());
        double loss = 0.0;
        for (auto i : batch) {
            const double pred = detail::mlp_forward_raw(shape_, params.data(), data_->row(i).data(), &acts);
            const double resid = pred - data_->targets[i];
            loss += resid * resid;
            detail::mlp_backward_raw(shape_, params.data(), acts, 2.0 * resid * scale, grad.data());
        }
        return loss * scale;
    }

private:
    MlpShape shape_;
    const LagDataset* data_;
};

/// Gradient of the stacked MSE over every row of `data`.
inline std::pair<LossValue, MlpParams> mlp_backward(const MlpParams& params, const LagDataset& data) {
    MlpObjective obj(params.shape, data);
    MlpParams grad = MlpParams::zeros(params.shape);
    std::vector<std::size_t> rows(data.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const double mse = obj.loss_and_gradient(params.values, rows, grad.values);
    return {LossValue{mse, data.rows()}, std::move(grad)};
}

}  // namespace emhnet
