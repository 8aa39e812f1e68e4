#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "emhnet/error.hpp"
#include "emhnet/series.hpp"

namespace emhnet {

struct LossValue {
    double mse = 0.0;
    std::size_t sample_count = 0;
};

/// Mean of squared residuals over stacked rows.
inline LossValue stacked_mse(std::span<const double> pred, std::span<const double> targets) {
    if (pred.size() != targets.size())
        throw ShapeError("stacked_mse: " + std::to_string(pred.size()) + " predictions for " +
                         std::to_string(targets.size()) + " targets");
    LossValue out{0.0, pred.size()};
    if (pred.empty()) return out;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = targets[i] - pred[i];
        acc += r * r;
    }
    out.mse = acc / double(pred.size());
    return out;
}

/// Panel loss: (1/N) sum_n (1/T) sum_t (x_tn - pred_tn)^2 against the
/// current-value column. With `mask_padding`, padded rows are skipped and T is
/// replaced by the series' own row count; an all-padding series contributes 0.
/// `pred` is row-major N x T.
inline LossValue panel_mse(std::span<const double> pred, const PaddedPanel& panel, bool mask_padding) {
    const std::size_t n_series = panel.series_count();
    const std::size_t steps = panel.steps();
    if (pred.size() != n_series * steps)
        throw ShapeError("panel_mse: prediction size " + std::to_string(pred.size()) + " does not match panel " +
                         std::to_string(n_series) + "x" + std::to_string(steps));
    LossValue out;
    if (n_series == 0 || steps == 0) return out;
    double total = 0.0;
    for (std::size_t n = 0; n < n_series; ++n) {
        const std::size_t first = mask_padding ? panel.first_row(n) : 0;
        const std::size_t count = steps - first;
        if (count == 0) continue;
        double acc = 0.0;
        for (std::size_t r = first; r < steps; ++r) {
            const double d = panel.at(n, r, PaddedPanel::kCurrent) - pred[n * steps + r];
            acc += d * d;
        }
        total += acc / double(count);
        out.sample_count += count;
    }
    out.mse = total / double(n_series);
    return out;
}

}  // namespace emhnet
