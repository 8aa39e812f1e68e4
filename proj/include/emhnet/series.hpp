#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "emhnet/date.hpp"
#include "emhnet/error.hpp"
#include "emhnet/random.hpp"

namespace emhnet {

enum class Transform { level, log, diff_log };

inline std::string_view to_string(Transform t) {
    switch (t) {
        case Transform::level: return "level";
        case Transform::log: return "log";
        case Transform::diff_log: return "diff-log";
    }
    return "?";
}

inline Transform parse_transform(std::string_view text) {
    if (text == "level") return Transform::level;
    if (text == "log") return Transform::log;
    if (text == "diff-log" || text == "diff_log") return Transform::diff_log;
    throw ConfigError("unknown transform '" + std::string(text) + "'");
}

/// One ticker's dated observations. `scale` records which transform produced
/// the values; raw closing prices are `Transform::level`.
struct PriceSeries {
    std::string ticker;
    std::vector<Date> dates;
    std::vector<double> values;
    Frequency frequency = Frequency::monthly;
    Transform scale = Transform::level;

    [[nodiscard]] std::size_t size() const { return values.size(); }
};

/// Checks ordering, uniform spacing and (for raw prices) positivity.
inline void validate(const PriceSeries& s) {
    if (s.dates.size() != s.values.size())
        throw ShapeError(s.ticker + ": " + std::to_string(s.dates.size()) + " dates for " +
                         std::to_string(s.values.size()) + " values");
    if (s.values.empty()) throw DataError(s.ticker + ": empty series");
    const int step = months_per_step(s.frequency);
    for (std::size_t i = 1; i < s.dates.size(); ++i) {
        if (s.dates[i] <= s.dates[i - 1])
            throw DataError(s.ticker + ": dates not strictly increasing at index " + std::to_string(i));
        if (s.dates[i].month_index() - s.dates[i - 1].month_index() != step)
            throw DataError(s.ticker + ": spacing between " + to_string(s.dates[i - 1]) + " and " +
                            to_string(s.dates[i]) + " is not one " + std::string(to_string(s.frequency)) +
                            " step");
    }
    if (s.scale == Transform::level) {
        for (std::size_t i = 0; i < s.values.size(); ++i)
            if (!(s.values[i] > 0.0))
                throw DataError(s.ticker + ": non-positive price at index " + std::to_string(i));
    }
}

/// level is the identity, log is elementwise ln, diff-log is successive
/// differences of ln (one shorter, first timestamp dropped).
inline PriceSeries apply_transform(const PriceSeries& series, Transform t) {
    if (t == Transform::level) return series;
    if (series.scale != Transform::level)
        throw ArgumentError(series.ticker + ": transform applied to already-transformed series");
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        if (!(series.values[i] > 0.0))
            throw DomainError(series.ticker + ": non-positive value " + std::to_string(series.values[i]) +
                              " at index " + std::to_string(i) + " under " + std::string(to_string(t)));
    }
    PriceSeries out;
    out.ticker = series.ticker;
    out.frequency = series.frequency;
    out.scale = t;
    if (t == Transform::log) {
        out.dates = series.dates;
        out.values.reserve(series.size());
        for (double v : series.values) out.values.push_back(std::log(v));
        return out;
    }
    if (series.size() < 2) throw DomainError(series.ticker + ": diff-log needs at least two observations");
    out.dates.assign(series.dates.begin() + 1, series.dates.end());
    out.values.reserve(series.size() - 1);
    for (std::size_t i = 1; i < series.size(); ++i)
        out.values.push_back(std::log(series.values[i]) - std::log(series.values[i - 1]));
    return out;
}

// ---------------------------------------------------------------------------
// Padded panel for recurrent models.
//
// Series n of length T_n contributes T_n - 1 rows (time, previous value,
// current value); the first observation has no predecessor. All series are
// front-padded with zero rows to a common T = max_n (T_n - 1), and the time
// column continues backwards in steps of one observation period.

class PaddedPanel {
public:
    static constexpr std::size_t kTime = 0;
    static constexpr std::size_t kPast = 1;
    static constexpr std::size_t kCurrent = 2;

    PaddedPanel() = default;

    PaddedPanel(std::size_t series, std::size_t steps)
        : n_(series), t_(steps), data_(series * steps * 3, 0.0), lengths_(series, 0), tickers_(series),
          dates_(series) {}

    [[nodiscard]] std::size_t series_count() const { return n_; }
    [[nodiscard]] std::size_t steps() const { return t_; }

    double& at(std::size_t n, std::size_t r, std::size_t col) { return data_[(n * t_ + r) * 3 + col]; }
    [[nodiscard]] double at(std::size_t n, std::size_t r, std::size_t col) const {
        return data_[(n * t_ + r) * 3 + col];
    }

    /// Original length T_n of series n (after transform).
    [[nodiscard]] std::size_t length(std::size_t n) const { return lengths_[n]; }
    /// Rows of series n that carry data: T_n - 1.
    [[nodiscard]] std::size_t usable_rows(std::size_t n) const { return lengths_[n] > 0 ? lengths_[n] - 1 : 0; }
    /// First non-padded row of series n.
    [[nodiscard]] std::size_t first_row(std::size_t n) const { return t_ - usable_rows(n); }
    [[nodiscard]] bool is_padding(std::size_t n, std::size_t r) const { return r < first_row(n); }

    [[nodiscard]] const std::string& ticker(std::size_t n) const { return tickers_[n]; }
    /// Date of the current value in row r (only meaningful for non-padded rows).
    [[nodiscard]] const Date& date(std::size_t n, std::size_t r) const { return dates_[n][r - first_row(n)]; }
    [[nodiscard]] Frequency frequency() const { return frequency_; }

    /// Panel restricted to the given series, re-trimmed to their longest length.
    [[nodiscard]] PaddedPanel subset(std::span<const std::size_t> indices) const {
        std::size_t steps = 0;
        for (auto i : indices) steps = std::max(steps, usable_rows(i));
        PaddedPanel out(indices.size(), steps);
        out.frequency_ = frequency_;
        const std::size_t offset = t_ - steps;
        for (std::size_t k = 0; k < indices.size(); ++k) {
            const std::size_t src = indices[k];
            out.lengths_[k] = lengths_[src];
            out.tickers_[k] = tickers_[src];
            out.dates_[k] = dates_[src];
            for (std::size_t r = 0; r < steps; ++r)
                for (std::size_t c = 0; c < 3; ++c) out.at(k, r, c) = at(src, r + offset, c);
        }
        return out;
    }

private:
    friend PaddedPanel build_padded_panel(std::span<const PriceSeries>);

    std::size_t n_ = 0;
    std::size_t t_ = 0;
    std::vector<double> data_;
    std::vector<std::size_t> lengths_;
    std::vector<std::string> tickers_;
    std::vector<std::vector<Date>> dates_;
    Frequency frequency_ = Frequency::monthly;
};

inline PaddedPanel build_padded_panel(std::span<const PriceSeries> series_list) {
    if (series_list.empty()) throw ConfigError("cannot build a panel from zero series");
    const Frequency freq = series_list.front().frequency;
    std::size_t steps = 0;
    for (const auto& s : series_list) {
        if (s.frequency != freq)
            throw ConfigError("mixed frequencies in panel: " + s.ticker + " is " + std::string(to_string(s.frequency)) +
                              ", expected " + std::string(to_string(freq)));
        if (s.size() < 2) throw ArgumentError(s.ticker + ": panel series need at least two observations");
        steps = std::max(steps, s.size() - 1);
    }
    PaddedPanel panel(series_list.size(), steps);
    panel.frequency_ = freq;
    const double dt = months_per_step(freq) / 12.0;
    for (std::size_t n = 0; n < series_list.size(); ++n) {
        const auto& s = series_list[n];
        panel.lengths_[n] = s.size();
        panel.tickers_[n] = s.ticker;
        panel.dates_[n].assign(s.dates.begin() + 1, s.dates.end());
        const std::size_t first = panel.first_row(n);
        const double t_first = s.dates[1].decimal_year();
        for (std::size_t r = 0; r < steps; ++r) {
            panel.at(n, r, PaddedPanel::kTime) = t_first + dt * (double(r) - double(first));
            if (r < first) continue;
            const std::size_t k = r - first + 1;
            panel.at(n, r, PaddedPanel::kPast) = s.values[k - 1];
            panel.at(n, r, PaddedPanel::kCurrent) = s.values[k];
        }
    }
    return panel;
}

// ---------------------------------------------------------------------------
// Stacked lag matrices for feedforward models.

struct SampleOrigin {
    std::size_t series = 0;  ///< index into LagDataset::tickers
    std::size_t start = 0;   ///< index of the first window value in the source series
    Date target_date;
};

struct LagDataset {
    std::size_t lag_count = 0;
    std::vector<double> inputs;  ///< row-major, rows() x lag_count
    std::vector<double> targets;
    std::vector<SampleOrigin> origins;
    std::vector<std::string> tickers;
    std::size_t skipped_series = 0;

    [[nodiscard]] std::size_t rows() const { return targets.size(); }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {inputs.data() + i * lag_count, lag_count};
    }

    /// Dataset holding only the listed rows, in the listed order.
    [[nodiscard]] LagDataset select_rows(std::span<const std::size_t> indices) const {
        LagDataset out;
        out.lag_count = lag_count;
        out.tickers = tickers;
        out.inputs.reserve(indices.size() * lag_count);
        out.targets.reserve(indices.size());
        out.origins.reserve(indices.size());
        for (auto i : indices) {
            auto r = row(i);
            out.inputs.insert(out.inputs.end(), r.begin(), r.end());
            out.targets.push_back(targets[i]);
            out.origins.push_back(origins[i]);
        }
        return out;
    }

    /// Dataset keeping only the listed input columns.
    [[nodiscard]] LagDataset select_columns(std::span<const std::size_t> columns) const {
        LagDataset out;
        out.lag_count = columns.size();
        out.targets = targets;
        out.origins = origins;
        out.tickers = tickers;
        out.skipped_series = skipped_series;
        out.inputs.reserve(rows() * columns.size());
        for (std::size_t i = 0; i < rows(); ++i) {
            for (auto c : columns) {
                if (c >= lag_count) throw ArgumentError("column " + std::to_string(c) + " out of range");
                out.inputs.push_back(inputs[i * lag_count + c]);
            }
        }
        return out;
    }
};

/// Row t of series n is the window [x_t, ..., x_{t+m-1}] with target x_{t+m};
/// series with T_n <= m are skipped and counted.
inline LagDataset build_lag_dataset(std::span<const PriceSeries> series_list, std::size_t m) {
    if (m < 1) throw ArgumentError("lag count must be at least 1");
    LagDataset out;
    out.lag_count = m;
    for (const auto& s : series_list) {
        if (s.size() <= m) {
            ++out.skipped_series;
            continue;
        }
        const std::size_t idx = out.tickers.size();
        out.tickers.push_back(s.ticker);
        for (std::size_t t = 0; t + m < s.size(); ++t) {
            out.inputs.insert(out.inputs.end(), s.values.begin() + t, s.values.begin() + t + m);
            out.targets.push_back(s.values[t + m]);
            out.origins.push_back({idx, t, s.dates[t + m]});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Train/test splitting.

struct RandomSplit {
    double train_fraction = 0.67;
    std::uint64_t seed = 0;
};

/// Rows whose target date is strictly before the cutoff go to train.
struct TemporalSplit {
    Date cutoff;
};

using SplitSpec = std::variant<RandomSplit, TemporalSplit>;

template <class T>
struct Partition {
    T train;
    T test;
};

namespace detail {

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> random_partition(std::size_t total,
                                                                                      const RandomSplit& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("train fraction must lie in (0, 1)");
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * double(total)));
    if (n_train == 0 || n_train == total)
        throw ConfigError("split of " + std::to_string(total) + " units at fraction " +
                          std::to_string(spec.train_fraction) + " leaves an empty partition");
    std::vector<std::size_t> train(order.begin(), order.begin() + std::ptrdiff_t(n_train));
    std::vector<std::size_t> test(order.begin() + std::ptrdiff_t(n_train), order.end());
    // Keep source order inside each partition.
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

}  // namespace detail

/// Random splits partition sample rows; temporal splits use target dates.
inline Partition<LagDataset> split(const LagDataset& data, const SplitSpec& spec) {
    std::vector<std::size_t> train, test;
    if (const auto* r = std::get_if<RandomSplit>(&spec)) {
        std::tie(train, test) = detail::random_partition(data.rows(), *r);
    } else {
        const Date cutoff = std::get<TemporalSplit>(spec).cutoff;
        for (std::size_t i = 0; i < data.rows(); ++i)
            (data.origins[i].target_date < cutoff ? train : test).push_back(i);
        if (train.empty() || test.empty())
            throw ConfigError("temporal split at " + to_string(cutoff) + " leaves an empty partition");
    }
    return {data.select_rows(train), data.select_rows(test)};
}

/// Random splits partition whole series. Temporal splits are not defined for
/// panels and raise ConfigError.
inline Partition<PaddedPanel> split(const PaddedPanel& panel, const SplitSpec& spec) {
    const auto* r = std::get_if<RandomSplit>(&spec);
    if (!r) throw ConfigError("temporal split is only supported for lag datasets");
    auto [train, test] = detail::random_partition(panel.series_count(), *r);
    return {panel.subset(train), panel.subset(test)};
}

}  // namespace emhnet
