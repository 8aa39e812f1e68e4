#pragma once

// Independent reference computations used by the unit tests and the
// acceptance runner. Nothing here calls into the library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "emhnet/emhnet.hpp"

namespace oracle {

inline double sig(double a) { return 1.0 / (1.0 + std::exp(-a)); }

/// Scalar-width basic cell: h' = tanh(wi x + wr h + b).
inline double basic_step(double wi, double wr, double b, double x, double h) { return std::tanh(wi * x + wr * h + b); }

struct ScalarLstm {
    double wi[4], wr[4], b[4];  // gate order i, f, g, o
};

inline void lstm_step(const ScalarLstm& p, double x, double& h, double& c) {
    const double i = sig(p.wi[0] * x + p.wr[0] * h + p.b[0]);
    const double f = sig(p.wi[1] * x + p.wr[1] * h + p.b[1]);
    const double g = std::tanh(p.wi[2] * x + p.wr[2] * h + p.b[2]);
    const double o = sig(p.wi[3] * x + p.wr[3] * h + p.b[3]);
    c = f * c + i * g;
    h = o * std::tanh(c);
}

struct ScalarGru {
    double wi[3], wr[3], b[3];  // gate order z, r, n
};

inline double gru_step(const ScalarGru& p, double x, double h) {
    const double z = sig(p.wi[0] * x + p.wr[0] * h + p.b[0]);
    const double r = sig(p.wi[1] * x + p.wr[1] * h + p.b[1]);
    const double n = std::tanh(p.wi[2] * x + p.wr[2] * (r * h) + p.b[2]);
    return (1.0 - z) * h + z * n;
}

/// Relative error with an absolute floor.
inline double rel_err(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Largest coordinatewise relative error between an analytic gradient and a
/// fourth-order central-difference gradient of `loss` at `x` (step h):
/// f'(x) ~ (8 (f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h.
/// Components smaller than `floor` in magnitude are compared on the absolute
/// scale `floor`.
template <class Loss>
double max_fd_error(Loss&& loss, std::vector<double> x, std::span<const double> analytic, double h = 1e-3,
                    double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        auto at = [&](double offset) {
            x[i] = x0 + offset;
            return loss(x);
        };
        const double near = at(h) - at(-h);
        const double far = at(2 * h) - at(-2 * h);
        const double fd = (8 * near - far) / (12 * h);
        x[i] = x0;
        worst = std::max(worst, rel_err(analytic[i], fd, floor));
    }
    return worst;
}

/// Adam transcribed straight from its update rule.
struct AdamReference {
    double m = 0.0, v = 0.0;
    int t = 0;
    double step(double param, double g, double rate, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        return param - rate * mhat / (std::sqrt(vhat) + eps);
    }
};

/// Random panel of `n` series with lengths in [2, max_len], optionally
/// forcing distinct lengths so that padding occurs.
inline emhnet::PaddedPanel random_panel(emhnet::Rng& rng, std::size_t n, std::size_t max_len) {
    std::vector<emhnet::PriceSeries> list;
    for (std::size_t k = 0; k < n; ++k) {
        emhnet::PriceSeries s;
        s.ticker = "S" + std::to_string(k);
        s.scale = emhnet::Transform::diff_log;
        const std::size_t len = 2 + rng.below(max_len - 1);
        for (std::size_t i = 0; i < len; ++i) {
            s.values.push_back(rng.normal());
            s.dates.push_back(emhnet::month_end_after({2001, 1, 31}, int(i)));
        }
        list.push_back(std::move(s));
    }
    return emhnet::build_padded_panel(list);
}

inline emhnet::LagDataset random_lag_dataset(emhnet::Rng& rng, std::size_t rows, std::size_t m) {
    emhnet::LagDataset d;
    d.lag_count = m;
    d.tickers = {"R"};
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < m; ++k) d.inputs.push_back(rng.normal());
        d.targets.push_back(rng.normal());
        d.origins.push_back({0, r, emhnet::month_end_after({2001, 1, 31}, int(r + m))});
    }
    return d;
}

/// Gradient-check trial for a random MLP; returns the worst coordinate error.
inline double mlp_trial(emhnet::Rng& rng) {
    using namespace emhnet;
    const std::size_t m = 1 + rng.below(4);
    const std::size_t layers = 1 + rng.below(3);
    const std::size_t width = 1 + rng.below(4);
    const MlpShape shape = MlpShape::make(m, layers, width);
    const LagDataset data = random_lag_dataset(rng, 1 + rng.below(6), m);
    auto params = MlpParams::random(shape, rng.next_u64());
    for (std::size_t l = 0; l < shape.layer_count(); ++l)
        for (auto& b : params.bias(l)) b = rng.uniform(-0.5, 0.5);
    const auto [loss, grad] = mlp_backward(params, data);
    auto f = [&](const std::vector<double>& w) {
        return stacked_mse(mlp_predict(MlpParams{shape, w}, data), data.targets).mse;
    };
    return max_fd_error(f, params.values, grad.values);
}

/// Gradient-check trial for a random recurrent network of the given kind.
inline double recurrent_trial(emhnet::Rng& rng, emhnet::CellKind kind) {
    using namespace emhnet;
    const RecurrentShape shape{kind, 1 + rng.below(2), 1 + rng.below(4)};
    const PaddedPanel panel = random_panel(rng, 1 + rng.below(3), 7);  // T <= 6
    const bool mask = rng.below(2) == 1;
    auto params = RecurrentParams::random(shape, rng.next_u64());
    for (auto& v : params.values) v += rng.uniform(-0.3, 0.3);  // non-zero biases too
    const auto [loss, grad] = recurrent_backward(params, panel, mask);
    auto f = [&](const std::vector<double>& w) {
        return panel_mse(recurrent_forward(RecurrentParams{shape, w}, panel), panel, mask).mse;
    };
    return max_fd_error(f, params.values, grad.values);
}

}  // namespace oracle
