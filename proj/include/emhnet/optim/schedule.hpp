#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "emhnet/error.hpp"

namespace emhnet {

/// Piecewise-constant learning rate. rates[i] applies on
/// [boundaries[i-1], boundaries[i]); a boundary step already uses the next rate.
struct LrSchedule {
    std::vector<std::uint64_t> boundaries;
    std::vector<double> rates;

    static LrSchedule constant(double rate) { return {{}, {rate}}; }

    void check() const {
        if (rates.size() != boundaries.size() + 1)
            throw ConfigError("learning-rate schedule needs exactly one more rate than boundaries");
        for (std::size_t i = 1; i < boundaries.size(); ++i)
            if (boundaries[i] <= boundaries[i - 1]) throw ConfigError("schedule boundaries must be strictly increasing");
        for (double r : rates)
            if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("learning rates must be positive and finite");
    }
};

inline double lr_at(const LrSchedule& schedule, std::uint64_t step) {
    const auto it = std::upper_bound(schedule.boundaries.begin(), schedule.boundaries.end(), step);
    return schedule.rates[std::size_t(it - schedule.boundaries.begin())];
}

/// Forecasting schedule (recurrent and feedforward models): boundaries at
/// 300k, 600k and 1.2M steps.
inline LrSchedule forecasting_schedule() { return {{300000, 600000, 1200000}, {1e-5, 5e-6, 1e-6, 1e-7}}; }

/// Relevance-test network schedule: boundaries at 600k and 1.2M steps.
inline LrSchedule relevance_schedule() { return {{600000, 1200000}, {0.004, 0.0005, 0.0001}}; }

/// Rescales boundaries so that a run of `horizon` steps maps onto `total_steps`,
/// keeping the rates. Boundaries collapsing onto each other are nudged apart.
inline LrSchedule compress_schedule(const LrSchedule& schedule, std::uint64_t horizon, std::uint64_t total_steps) {
    schedule.check();
    if (horizon == 0) throw ConfigError("schedule horizon must be positive");
    LrSchedule out = schedule;
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < out.boundaries.size(); ++i) {
        auto b = static_cast<std::uint64_t>(
            std::llround(double(schedule.boundaries[i]) * double(total_steps) / double(horizon)));
        b = std::max<std::uint64_t>(b, prev + 1);
        out.boundaries[i] = b;
        prev = b;
    }
    return out;
}

/// Step count the default schedules are taken to span. The last boundary
/// sits at 80% of the run.
inline std::uint64_t schedule_horizon(const LrSchedule& schedule) {
    if (schedule.boundaries.empty()) return 1;
    return schedule.boundaries.back() * 5 / 4;
}

}  // namespace emhnet
