#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "emhnet/error.hpp"
#include "emhnet/format.hpp"
#include "emhnet/ingest.hpp"
#include "emhnet/neural/checkpoint.hpp"
#include "emhnet/neural/loss.hpp"
#include "emhnet/neural/mlp.hpp"
#include "emhnet/neural/recurrent.hpp"
#include "emhnet/optim/schedule.hpp"
#include "emhnet/optim/train.hpp"
#include "emhnet/parallel.hpp"
#include "emhnet/pipeline/common.hpp"
#include "emhnet/random.hpp"
#include "emhnet/series.hpp"
#include "json.hpp"

namespace emhnet::pipeline {

enum class ModelFamily { mlp, recurrent };

/// Experiment manifest (JSON, version 1):
///
///   {"version": 1, "corpus": "corpus.json", "family": "mlp",
///    "grid": {"layers": [1, 2], "lags": [15, 10, 5, 1]},
///    "transform": "log",
///    "split": {"kind": "random", "train_fraction": 0.67},
///    "train": {"batch_size": 128, "total_steps": 20000, "eval_every": 10,
///              "hidden_width": 32, "mask_padding": false,
///              "schedule": "default" | {"boundaries": [...], "rates": [...]}},
///    "overlay_samples": 200}
///
/// Recurrent experiments use "family": "recurrent" with
/// "grid": {"layers": [1, 5], "cells": ["basic", "lstm", "gru"]}; the
/// families "rnn", "lstm" and "gru" are shorthands fixing a single cell.
/// A temporal split is {"kind": "temporal", "cutoff": "2016-01-01"}.
struct ExperimentManifest {
    std::filesystem::path corpus;
    ModelFamily family = ModelFamily::mlp;
    std::vector<std::size_t> layers;
    std::vector<std::size_t> lags;
    std::vector<CellKind> cells;
    Transform transform = Transform::log;
    SplitSpec split = RandomSplit{};
    std::size_t batch_size = 128;
    std::uint64_t total_steps = kDefaultTotalSteps;
    std::uint64_t eval_every = 10;
    std::size_t hidden_width = 32;
    bool mask_padding = false;
    std::optional<LrSchedule> schedule;  ///< empty: default schedule compressed onto total_steps
    std::size_t overlay_samples = 200;

    [[nodiscard]] LrSchedule effective_schedule() const {
        return schedule ? *schedule
                        : compress_schedule(forecasting_schedule(), schedule_horizon(forecasting_schedule()), total_steps);
    }
};

namespace detail {

template <class T>
T get_or(const nlohmann::json& obj, const char* key, T fallback) {
    return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

inline std::vector<std::size_t> positive_list(const nlohmann::json& grid, const char* key) {
    if (!grid.contains(key)) throw SchemaError(std::string("experiment grid needs '") + key + "'");
    auto values = grid.at(key).get<std::vector<std::size_t>>();
    if (values.empty()) throw ConfigError(std::string("experiment grid '") + key + "' is empty");
    for (auto v : values)
        if (v == 0) throw ConfigError(std::string("experiment grid '") + key + "' entries must be positive");
    return values;
}

}  // namespace detail

inline ExperimentManifest parse_experiment(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    try {
        if (!doc.is_object()) throw SchemaError("experiment manifest must be a JSON object");
        if (detail::get_or(doc, "version", 1) != 1) throw SchemaError("unsupported experiment manifest version");
        ExperimentManifest m;
        m.corpus = doc.at("corpus").get<std::string>();
        if (m.corpus.is_relative()) m.corpus = base_dir / m.corpus;

        const auto family = doc.at("family").get<std::string>();
        const auto& grid = doc.at("grid");
        m.layers = detail::positive_list(grid, "layers");
        if (family == "mlp") {
            m.family = ModelFamily::mlp;
            m.lags = detail::positive_list(grid, "lags");
        } else {
            m.family = ModelFamily::recurrent;
            if (family == "recurrent") {
                if (!grid.contains("cells")) throw SchemaError("recurrent grid needs 'cells'");
                for (const auto& c : grid.at("cells")) m.cells.push_back(parse_cell_kind(c.get<std::string>()));
                if (m.cells.empty()) throw ConfigError("experiment grid 'cells' is empty");
            } else {
                m.cells.push_back(parse_cell_kind(family));
            }
        }

        if (doc.contains("transform")) m.transform = parse_transform(doc.at("transform").get<std::string>());
        if (doc.contains("split")) {
            const auto& s = doc.at("split");
            const auto kind = s.at("kind").get<std::string>();
            if (kind == "random")
                m.split = RandomSplit{detail::get_or(s, "train_fraction", 0.67), 0};
            else if (kind == "temporal")
                m.split = TemporalSplit{parse_date(s.at("cutoff").get<std::string>())};
            else
                throw ConfigError("unknown split kind '" + kind + "'");
        }
        if (doc.contains("train")) {
            const auto& t = doc.at("train");
            m.batch_size = detail::get_or<std::size_t>(t, "batch_size", m.batch_size);
            m.total_steps = detail::get_or<std::uint64_t>(t, "total_steps", m.total_steps);
            m.eval_every = detail::get_or<std::uint64_t>(t, "eval_every", m.eval_every);
            m.hidden_width = detail::get_or<std::size_t>(t, "hidden_width", m.hidden_width);
            m.mask_padding = detail::get_or(t, "mask_padding", m.mask_padding);
            if (t.contains("schedule") && !(t.at("schedule").is_string() && t.at("schedule") == "default")) {
                const auto& s = t.at("schedule");
                LrSchedule sched{s.at("boundaries").get<std::vector<std::uint64_t>>(),
                                 s.at("rates").get<std::vector<double>>()};
                sched.check();
                m.schedule = std::move(sched);
            }
        }
        m.overlay_samples = detail::get_or<std::size_t>(doc, "overlay_samples", m.overlay_samples);
        if (m.hidden_width == 0) throw ConfigError("hidden_width must be positive");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("experiment manifest: ") + e.what());
    }
}

inline ExperimentManifest load_experiment(const std::filesystem::path& path) {
    return parse_experiment(read_json(path, "experiment manifest"), path.parent_path());
}

/// One grid cell: a layer count paired with either a lag count or a cell kind.
struct GridCell {
    std::size_t layers = 1;
    std::variant<std::size_t, CellKind> setting;

    [[nodiscard]] std::string setting_label() const {
        if (const auto* m = std::get_if<std::size_t>(&setting)) return "m" + std::to_string(*m);
        return std::string(to_string(std::get<CellKind>(setting)));
    }
    [[nodiscard]] std::string label() const { return "L" + std::to_string(layers) + "_" + setting_label(); }
};

inline std::vector<GridCell> grid_cells(const ExperimentManifest& m) {
    std::vector<GridCell> cells;
    for (auto l : m.layers) {
        if (m.family == ModelFamily::mlp)
            for (auto lag : m.lags) cells.push_back({l, lag});
        else
            for (auto c : m.cells) cells.push_back({l, c});
    }
    return cells;
}

struct OverlayPoint {
    std::string ticker;
    Date date;
    double actual = 0.0;
    double predicted = 0.0;
};

struct CellResult {
    GridCell cell;
    double train_mse = 0.0;
    double test_mse = 0.0;
    std::size_t train_samples = 0;
    std::size_t test_samples = 0;
    std::vector<LossPoint> trace;
    std::vector<OverlayPoint> overlay;
    Checkpoint checkpoint;
};

namespace detail {

/// Seeded subsample of the overlay pairs, returned in source order.
inline std::vector<OverlayPoint> sample_overlay(std::vector<OverlayPoint> all, std::size_t count, std::uint64_t seed) {
    if (all.size() <= count) return all;
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(idx));
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    std::vector<OverlayPoint> out;
    out.reserve(count);
    for (auto i : idx) out.push_back(std::move(all[i]));
    return out;
}

inline TrainConfig train_config(const ExperimentManifest& m, std::uint64_t seed) {
    TrainConfig c;
    c.batch_size = m.batch_size;
    c.total_steps = m.total_steps;
    c.eval_every = m.eval_every;
    c.schedule = m.effective_schedule();
    c.seed = seed;
    return c;
}

inline CellResult run_mlp_cell(const ExperimentManifest& m, const GridCell& cell, std::span<const PriceSeries> series,
                               std::uint64_t seed) {
    const std::size_t lags = std::get<std::size_t>(cell.setting);
    const LagDataset all = build_lag_dataset(series, lags);
    if (all.rows() == 0) throw ConfigError("no series is longer than " + std::to_string(lags) + " observations");
    SplitSpec spec = m.split;
    if (auto* r = std::get_if<RandomSplit>(&spec)) r->seed = derive_seed(seed, "split");
    const auto parts = emhnet::split(all, spec);

    const std::uint64_t cell_seed = derive_seed(seed, "cell/" + cell.label());
    const MlpShape shape = MlpShape::make(lags, cell.layers, m.hidden_width);
    MlpObjective objective(shape, parts.train);
    auto fit = train(objective, MlpParams::random(shape, derive_seed(cell_seed, "init")).values,
                     train_config(m, derive_seed(cell_seed, "batches")));
    const MlpParams params{shape, std::move(fit.params)};

    CellResult r;
    r.cell = cell;
    r.train_mse = stacked_mse(mlp_predict(params, parts.train), parts.train.targets).mse;
    const auto test_pred = mlp_predict(params, parts.test);
    r.test_mse = stacked_mse(test_pred, parts.test.targets).mse;
    r.train_samples = parts.train.rows();
    r.test_samples = parts.test.rows();
    r.trace = std::move(fit.trace);
    std::vector<OverlayPoint> pairs;
    for (std::size_t i = 0; i < parts.test.rows(); ++i) {
        const auto& o = parts.test.origins[i];
        pairs.push_back({parts.test.tickers[o.series], o.target_date, parts.test.targets[i], test_pred[i]});
    }
    r.overlay = sample_overlay(std::move(pairs), m.overlay_samples, derive_seed(cell_seed, "overlay"));
    r.checkpoint = {params, fit.state.step};
    return r;
}

inline CellResult run_recurrent_cell(const ExperimentManifest& m, const GridCell& cell,
                                     std::span<const PriceSeries> series, std::uint64_t seed) {
    const PaddedPanel panel = build_padded_panel(series);
    SplitSpec spec = m.split;
    if (auto* r = std::get_if<RandomSplit>(&spec)) r->seed = derive_seed(seed, "split");
    const auto parts = emhnet::split(panel, spec);

    const std::uint64_t cell_seed = derive_seed(seed, "cell/" + cell.label());
    const RecurrentShape shape{std::get<CellKind>(cell.setting), cell.layers, m.hidden_width};
    RecurrentObjective objective(shape, parts.train, m.mask_padding);
    auto fit = train(objective, RecurrentParams::random(shape, derive_seed(cell_seed, "init")).values,
                     train_config(m, derive_seed(cell_seed, "batches")));
    const RecurrentParams params{shape, std::move(fit.params)};

    CellResult r;
    r.cell = cell;
    r.train_mse = panel_mse(recurrent_forward(params, parts.train), parts.train, m.mask_padding).mse;
    const auto test_pred = recurrent_forward(params, parts.test);
    r.test_mse = panel_mse(test_pred, parts.test, m.mask_padding).mse;
    r.train_samples = parts.train.series_count();
    r.test_samples = parts.test.series_count();
    r.trace = std::move(fit.trace);
    std::vector<OverlayPoint> pairs;
    const auto& test = parts.test;
    for (std::size_t n = 0; n < test.series_count(); ++n)
        for (std::size_t t = test.first_row(n); t < test.steps(); ++t)
            pairs.push_back({test.ticker(n), test.date(n, t), test.at(n, t, PaddedPanel::kCurrent),
                             test_pred[n * test.steps() + t]});
    r.overlay = sample_overlay(std::move(pairs), m.overlay_samples, derive_seed(cell_seed, "overlay"));
    r.checkpoint = {params, fit.state.step};
    return r;
}

}  // namespace detail

/// Trains every grid cell. Cells are independent and may run on up to
/// `jobs` threads; results come back in grid order. A diverging cell raises
/// TrainingError naming the cell.
inline std::vector<CellResult> run_experiment(const ExperimentManifest& m, std::span<const PriceSeries> corpus,
                                              std::uint64_t seed, std::size_t jobs) {
    std::vector<PriceSeries> series;
    series.reserve(corpus.size());
    for (const auto& s : corpus) series.push_back(apply_transform(s, m.transform));
    const auto cells = grid_cells(m);
    std::vector<CellResult> results(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        try {
            results[i] = m.family == ModelFamily::mlp ? detail::run_mlp_cell(m, cells[i], series, seed)
                                                      : detail::run_recurrent_cell(m, cells[i], series, seed);
        } catch (const TrainingError& e) {
            throw TrainingError("cell " + cells[i].label() + ": " + e.what());
        }
    });
    return results;
}

/// results.csv holds one row per cell; table.csv pivots test MSE with one row
/// per layer count and one column per lag count or cell kind.
inline void write_experiment_outputs(const std::filesystem::path& out_dir, const std::vector<CellResult>& results) {
    {
        auto out = open_output(out_dir / "results.csv");
        out << "cell,layers,setting,train_mse,test_mse,train_samples,test_samples\n";
        for (const auto& r : results)
            out << r.cell.label() << ',' << r.cell.layers << ',' << r.cell.setting_label() << ','
                << format_real(r.train_mse) << ',' << format_real(r.test_mse) << ',' << r.train_samples << ','
                << r.test_samples << '\n';
    }
    {
        std::vector<std::string> columns;
        std::vector<std::size_t> rows;
        std::map<std::pair<std::size_t, std::string>, double> value;
        for (const auto& r : results) {
            const auto col = r.cell.setting_label();
            if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
            if (std::find(rows.begin(), rows.end(), r.cell.layers) == rows.end()) rows.push_back(r.cell.layers);
            value[{r.cell.layers, col}] = r.test_mse;
        }
        auto out = open_output(out_dir / "table.csv");
        out << "layers";
        for (const auto& c : columns) out << ',' << c;
        out << '\n';
        for (auto l : rows) {
            out << l;
            for (const auto& c : columns) {
                auto it = value.find({l, c});
                out << ',' << (it == value.end() ? std::string() : format_real(it->second));
            }
            out << '\n';
        }
    }
    for (const auto& r : results) {
        const auto label = file_label(r.cell.label());
        auto loss = open_output(out_dir / ("loss_" + label + ".csv"));
        loss << "step,loss\n";
        for (const auto& p : r.trace) loss << p.step << ',' << format_real(p.loss) << '\n';
        auto overlay = open_output(out_dir / ("overlay_" + label + ".csv"));
        overlay << "ticker,date,actual,predicted\n";
        for (const auto& p : r.overlay)
            overlay << p.ticker << ',' << to_string(p.date) << ',' << format_real(p.actual) << ','
                    << format_real(p.predicted) << '\n';
        save_checkpoint(out_dir / ("params_" + label + ".json"), r.checkpoint);
    }
}

struct TrainOptions {
    std::filesystem::path experiment;
    std::filesystem::path out;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

inline std::vector<CellResult> cmd_train(const TrainOptions& opt) {
    RunMeta meta("train", {{"experiment", opt.experiment.string()}, {"seed", opt.seed}, {"jobs", opt.jobs}});
    const ExperimentManifest m = load_experiment(opt.experiment);
    const Corpus corpus = load_corpus(load_manifest(m.corpus));
    auto results = run_experiment(m, corpus.series, opt.seed, opt.jobs);
    write_experiment_outputs(opt.out, results);
    meta.write(opt.out);
    return results;
}

}  // namespace emhnet::pipeline
