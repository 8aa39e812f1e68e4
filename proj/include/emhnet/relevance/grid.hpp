#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "emhnet/error.hpp"
#include "emhnet/random.hpp"
#include "emhnet/relevance/bootstrap.hpp"
#include "emhnet/series.hpp"
#include "json.hpp"

namespace emhnet {

/// Delta-log-price regressed on its own lags: lags {1}, {1,2,3} or {1..5}
/// in the standard grid; the residual plays the role of the noise term.
struct ReturnModelSpec {
    std::string ticker;
    std::vector<std::size_t> lags;
};

inline std::vector<std::vector<std::size_t>> default_lag_sets() { return {{1}, {1, 2, 3}, {1, 2, 3, 4, 5}}; }

inline std::string lag_label(std::span<const std::size_t> lags) {
    std::string out;
    for (auto l : lags) out += (out.empty() ? "" : "-") + std::to_string(l);
    return out;
}

/// Pre-cutoff training rows for one return model. Column q holds lag lags[q].
inline LagDataset build_return_dataset(const PriceSeries& prices, std::span<const std::size_t> lags, const Date& cutoff) {
    if (lags.empty()) throw ConfigError(prices.ticker + ": empty lag set");
    const std::size_t m = *std::max_element(lags.begin(), lags.end());
    if (*std::min_element(lags.begin(), lags.end()) < 1) throw ConfigError("lags start at 1");
    const PriceSeries returns = apply_transform(prices, Transform::diff_log);
    const std::vector<PriceSeries> one{returns};
    const LagDataset all = build_lag_dataset(one, m);
    std::vector<std::size_t> columns;
    for (auto l : lags) columns.push_back(m - l);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < all.rows(); ++i)
        if (all.origins[i].target_date < cutoff) rows.push_back(i);
    if (rows.empty())
        throw ConfigError(prices.ticker + ": no observations before " + to_string(cutoff) + " for lags " +
                          lag_label(lags));
    return all.select_rows(rows).select_columns(columns);
}

struct ModelResult {
    ReturnModelSpec model;
    BootstrapResult result;
};

struct GridReport {
    std::vector<ModelResult> models;
    BonferroniReport joint;
};

/// Runs the bootstrap relevance test for every (ticker, lag set) pair and
/// combines the p-values with the Bonferroni bound. Each model gets its own
/// seed derived from the master seed, ticker and lag set; all inputs of a
/// model are under test.
inline GridReport run_relevance_grid(std::span<const PriceSeries> corpus, std::span<const std::string> tickers,
                                 std::span<const std::vector<std::size_t>> lag_sets, const RelevanceSpec& base,
                                 const RelevanceConfig& config, double alpha) {
    if (tickers.empty()) throw ConfigError("relevance grid needs at least one ticker");
    if (lag_sets.empty()) throw ConfigError("relevance grid needs at least one lag set");
    std::vector<const PriceSeries*> chosen;
    for (const auto& t : tickers) {
        auto it = std::find_if(corpus.begin(), corpus.end(), [&](const PriceSeries& s) { return s.ticker == t; });
        if (it == corpus.end()) throw ConfigError("ticker " + t + " is not in the corpus");
        chosen.push_back(&*it);
    }
    GridReport report;
    std::vector<double> p_values;
    for (const auto* series : chosen) {
        for (const auto& lags : lag_sets) {
            const LagDataset data = build_return_dataset(*series, lags, base.cutoff);
            RelevanceSpec spec = base;
            spec.seed = derive_seed(base.seed, series->ticker + "/" + lag_label(lags));
            spec.inputs_under_test.resize(lags.size());
            for (std::size_t q = 0; q < lags.size(); ++q) spec.inputs_under_test[q] = q;
            BootstrapResult r;
            try {
                r = bootstrap_test(data, spec, config);
            } catch (const BootstrapError& e) {
                throw BootstrapError(series->ticker + " lags " + lag_label(lags) + ": " + e.what());
            }
            p_values.push_back(r.p_value);
            report.models.push_back({{series->ticker, lags}, std::move(r)});
        }
    }
    report.joint = bonferroni(p_values, alpha);
    return report;
}

inline nlohmann::json to_json(const BonferroniReport& b) {
    return {{"p_values", b.p_values}, {"m_models", b.models}, {"P_1", b.p_min},
            {"bound", b.bound},       {"alpha", b.alpha},     {"reject", b.reject}};
}

inline nlohmann::json to_json(const GridReport& report) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : report.models) {
        models.push_back({{"ticker", m.model.ticker},
                          {"lags", m.model.lags},
                          {"m_hat", m.result.m_hat},
                          {"k", m.result.k},
                          {"p_value", m.result.p_value},
                          {"v", m.result.boot_stats.size()},
                          {"n", m.result.sample_size},
                          {"seed", m.result.seed}});
    }
    nlohmann::json doc = to_json(report.joint);
    doc["version"] = 1;
    doc["models"] = std::move(models);
    return doc;
}

}  // namespace emhnet
