#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "emhnet/error.hpp"
#include "emhnet/format.hpp"
#include "emhnet/optim/adam.hpp"
#include "emhnet/optim/schedule.hpp"
#include "emhnet/random.hpp"

namespace emhnet {

/// A differentiable mean loss over indexable samples.
template <class O>
concept Objective = requires(const O& o, std::span<const double> params, std::span<const std::size_t> batch,
                             std::span<double> grad, std::size_t index) {
    { o.sample_count() } -> std::convertible_to<std::size_t>;
    { o.loss_and_gradient(params, batch, grad) } -> std::convertible_to<double>;
    { o.parameter_name(index) } -> std::convertible_to<std::string>;
};

inline constexpr std::uint64_t kDefaultTotalSteps = 20000;

struct TrainConfig {
    std::size_t batch_size = 128;
    std::uint64_t total_steps = kDefaultTotalSteps;
    LrSchedule schedule =
        compress_schedule(forecasting_schedule(), schedule_horizon(forecasting_schedule()), kDefaultTotalSteps);
    std::uint64_t seed = 0;
    std::uint64_t eval_every = 10;
    AdamConfig adam;

    void check() const {
        if (total_steps < 1) throw ConfigError("total_steps must be at least 1");
        if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
        if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
        schedule.check();
    }
};

/// Mean batch loss over the `eval_every` updates ending at `step`.
struct LossPoint {
    std::uint64_t step = 0;
    double loss = 0.0;
};

struct TrainResult {
    std::vector<double> params;
    std::vector<LossPoint> trace;
    AdamState state;
};

/// Mini-batch Adam. Samples are drawn from `pool` (defaults to every sample
/// once; a bootstrap passes its resampled indices). Each epoch reshuffles the
/// pool with a seed derived from (config.seed, epoch); the last short batch of
/// an epoch is used as is.
template <Objective O>
TrainResult train(const O& objective, std::vector<double> initial, const TrainConfig& config,
                  std::span<const std::size_t> pool = {}) {
    config.check();
    std::vector<std::size_t> order;
    if (pool.empty()) {
        order.resize(objective.sample_count());
        std::iota(order.begin(), order.end(), std::size_t{0});
    } else {
        order.assign(pool.begin(), pool.end());
    }
    if (order.empty()) throw ConfigError("cannot train on an empty dataset");

    TrainResult result;
    result.params = std::move(initial);
    result.state = AdamState::for_size(result.params.size(), config.adam);
    result.trace.reserve(std::size_t((config.total_steps + config.eval_every - 1) / config.eval_every));
    std::vector<double> grad(result.params.size());
    const ParameterNamer namer = [&objective](std::size_t i) { return objective.parameter_name(i); };

    std::uint64_t epoch = 0;
    std::size_t cursor = order.size();
    double window = 0.0;
    std::uint64_t window_count = 0;
    for (std::uint64_t step = 0; step < config.total_steps; ++step) {
        if (cursor >= order.size()) {
            Rng rng(derive_seed(config.seed, "epoch", epoch++));
            rng.shuffle(std::span<std::size_t>(order));
            cursor = 0;
        }
        const std::size_t len = std::min(config.batch_size, order.size() - cursor);
        const std::span<const std::size_t> batch(order.data() + cursor, len);
        cursor += len;

        const double loss = objective.loss_and_gradient(result.params, batch, grad);
        if (!std::isfinite(loss)) {
            std::string recent;
            const std::size_t from = result.trace.size() > 5 ? result.trace.size() - 5 : 0;
            for (std::size_t i = from; i < result.trace.size(); ++i)
                recent += " " + std::to_string(result.trace[i].step) + ":" + format_real(result.trace[i].loss);
            throw TrainingError("loss became non-finite at step " + std::to_string(step + 1) +
                                "; recent trace:" + (recent.empty() ? " (none)" : recent));
        }
        adam_step(result.params, grad, result.state, lr_at(config.schedule, step), namer);

        window += loss;
        ++window_count;
        if (window_count == config.eval_every || step + 1 == config.total_steps) {
            result.trace.push_back({step + 1, window / double(window_count)});
            window = 0.0;
            window_count = 0;
        }
    }
    return result;
}

/// Loss over every sample (one large batch).
template <Objective O>
double full_loss(const O& objective, std::span<const double> params) {
    std::vector<std::size_t> all(objective.sample_count());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<double> grad(params.size());
    return objective.loss_and_gradient(params, all, grad);
}

}  // namespace emhnet
