#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emhnet/error.hpp"
#include "emhnet/optim/schedule.hpp"
#include "emhnet/optim/train.hpp"
#include "emhnet/parallel.hpp"
#include "emhnet/random.hpp"
#include "emhnet/relevance/test_network.hpp"
#include "emhnet/series.hpp"

namespace emhnet {

/// Training settings for the test network and its bootstrap refits. Both
/// schedules keep the relevance_schedule() rates with boundaries at 40% and
/// 80% of the respective step budget.
struct RelevanceConfig {
    std::size_t hidden = 16;
    std::uint64_t fit_steps = 20000;
    std::uint64_t refit_steps = 2000;
    std::size_t batch_size = 128;
    /// Z-score every input column before fitting (statistic is then on that scale).
    bool standardize = false;
    std::size_t jobs = 1;

    [[nodiscard]] TrainConfig fit_config(std::uint64_t seed) const { return make(fit_steps, seed); }
    [[nodiscard]] TrainConfig refit_config(std::uint64_t seed) const { return make(refit_steps, seed); }

private:
    [[nodiscard]] TrainConfig make(std::uint64_t steps, std::uint64_t seed) const {
        TrainConfig c;
        c.batch_size = batch_size;
        c.total_steps = steps;
        c.schedule = compress_schedule(relevance_schedule(), schedule_horizon(relevance_schedule()), steps);
        c.seed = seed;
        c.eval_every = std::max<std::uint64_t>(1, steps);
        return c;
    }
};

/// Inputs under test (0-based column indices), replication count, master
/// seed and the train cutoff used when building datasets from a corpus.
struct RelevanceSpec {
    std::vector<std::size_t> inputs_under_test;
    std::size_t replications = 1000;
    std::uint64_t seed = 0;
    Date cutoff{2012, 1, 1};
};

struct BootstrapResult {
    double m_hat = 0.0;
    std::vector<double> boot_stats;  ///< B*_N / N per replication, in replication order
    std::size_t k = 0;               ///< replications with statistic strictly above m_hat
    double p_value = 1.0;
    std::size_t sample_size = 0;
    std::uint64_t seed = 0;
    TestNetwork fitted;
};

/// (k + 1) / (v + 1).
inline double bootstrap_p_value(std::size_t k, std::size_t v) { return double(k + 1) / double(v + 1); }

/// Runs Adam on the empirical squared error starting from `start`, drawing
/// batches from `pool` (all rows when empty).
inline TestNetwork train_test_network(const LagDataset& data, TestNetwork start, const TrainConfig& config,
                                      std::span<const std::size_t> pool = {}) {
    if (data.rows() == 0) throw ConfigError("cannot fit the test network on an empty dataset");
    if (start.inputs != data.lag_count) throw ShapeError("starting network does not match the dataset");
    TestNetworkObjective objective(start.inputs, start.hidden, data);
    auto result = train(objective, std::move(start.weights), config, pool);
    start.weights = std::move(result.params);
    return start;
}

/// Fits the test network from a seeded random initialisation.
inline TestNetwork fit_test_network(const LagDataset& data, const RelevanceConfig& config, std::uint64_t seed) {
    if (data.rows() == 0) throw ConfigError("cannot fit the test network on an empty dataset");
    return train_test_network(data, TestNetwork::random(data.lag_count, config.hidden, derive_seed(seed, "init")),
                              config.fit_config(derive_seed(seed, "batches")));
}

/// B*_N / N = mean_n m(X_n, w*) - mean_n m(X_n, w) - mean_n grad m(X_n, w)' (w* - w),
/// all sums over the original rows. `m_hat` and `mean_grad` are the last two
/// ingredients evaluated at w.
inline double bootstrap_statistic(const TestNetwork& fitted, const TestNetwork& refitted, std::span<const double> inputs,
                                  std::span<const std::size_t> subset, double m_hat,
                                  std::span<const double> mean_grad) {
    const double m_star = m_statistic(refitted, inputs, subset);
    double linear = 0.0;
    for (std::size_t k = 0; k < mean_grad.size(); ++k)
        linear += mean_grad[k] * (refitted.weights[k] - fitted.weights[k]);
    return m_star - m_hat - linear;
}

inline LagDataset standardize_inputs(const LagDataset& data) {
    LagDataset out = data;
    const std::size_t d = data.lag_count, n = data.rows();
    if (n < 2) return out;
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += data.inputs[r * d + c];
        mean /= double(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) var += std::pow(data.inputs[r * d + c] - mean, 2);
        const double sd = std::sqrt(var / double(n - 1));
        const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
        for (std::size_t r = 0; r < n; ++r) out.inputs[r * d + c] = (data.inputs[r * d + c] - mean) * scale;
    }
    return out;
}

/// Bootstrap test that the inputs under test are irrelevant to the fitted
/// network. Every replication resamples the (window, target) rows with
/// replacement, refits from the original fit, and records the linearised
/// statistic. Replications are independent and run on up to config.jobs
/// threads; the result does not depend on the thread count.
inline BootstrapResult bootstrap_test(const LagDataset& raw, const RelevanceSpec& spec, const RelevanceConfig& config) {
    if (spec.replications < 1) throw ConfigError("bootstrap needs at least one replication");
    if (raw.rows() == 0) throw ConfigError("bootstrap on an empty dataset");
    const LagDataset data = config.standardize ? standardize_inputs(raw) : raw;

    BootstrapResult out;
    out.seed = spec.seed;
    out.sample_size = data.rows();
    try {
        out.fitted = fit_test_network(data, config, derive_seed(spec.seed, "fit"));
    } catch (const Error& e) {
        throw BootstrapError(std::string("initial fit failed: ") + e.what());
    }
    detail::check_subset(out.fitted, spec.inputs_under_test);
    const auto& subset = spec.inputs_under_test;
    out.m_hat = m_statistic(out.fitted, data.inputs, subset);
    const auto mean_grad = mean_m_weight_gradient(out.fitted, data.inputs, subset);

    const std::size_t n = data.rows();
    out.boot_stats.assign(spec.replications, 0.0);
    parallel_for(spec.replications, config.jobs, [&](std::size_t r) {
        try {
            const std::uint64_t rep_seed = derive_seed(spec.seed, "replication", r);
            Rng rng(derive_seed(rep_seed, "resample"));
            std::vector<std::size_t> pool(n);
            for (auto& idx : pool) idx = std::size_t(rng.below(n));
            const TestNetwork star =
                train_test_network(data, out.fitted, config.refit_config(derive_seed(rep_seed, "batches")), pool);
            out.boot_stats[r] = bootstrap_statistic(out.fitted, star, data.inputs, subset, out.m_hat, mean_grad);
        } catch (const Error& e) {
            throw BootstrapError("replication " + std::to_string(r) + " failed: " + e.what());
        }
    });
    out.k = std::size_t(std::count_if(out.boot_stats.begin(), out.boot_stats.end(),
                                      [&](double s) { return s > out.m_hat; }));
    out.p_value = bootstrap_p_value(out.k, spec.replications);
    return out;
}

struct BonferroniReport {
    std::vector<double> p_values;
    std::size_t models = 0;
    double p_min = 1.0;
    double bound = 1.0;  ///< models * p_min
    double alpha = 0.1;
    bool reject = false;
};

/// Joint test over several models: reject when models * min(p) <= alpha.
inline BonferroniReport bonferroni(std::span<const double> p_values, double alpha) {
    if (p_values.empty()) throw ArgumentError("bonferroni needs at least one p-value");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
    BonferroniReport r;
    r.p_values.assign(p_values.begin(), p_values.end());
    r.models = p_values.size();
    r.alpha = alpha;
    r.p_min = *std::min_element(p_values.begin(), p_values.end());
    r.bound = double(r.models) * r.p_min;
    r.reject = r.bound <= alpha;
    return r;
}

}  // namespace emhnet
