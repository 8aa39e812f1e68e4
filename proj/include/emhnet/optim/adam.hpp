#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "emhnet/error.hpp"

namespace emhnet {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step = 0;
    AdamConfig config;

    static AdamState for_size(std::size_t n, AdamConfig config = {}) {
        return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0, config};
    }
};

using ParameterNamer = std::function<std::string(std::size_t)>;

/// Bias-corrected Adam update in place. Rejects non-finite gradients before
/// touching any state.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double rate,
                      const ParameterNamer& name = {}) {
    if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size())
        throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i]))
            throw TrainingError("non-finite gradient in " + (name ? name(i) : "param[" + std::to_string(i) + "]") +
                                " at step " + std::to_string(state.step + 1));
    }
    const auto& c = state.config;
    ++state.step;
    const double t = double(state.step);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g * g;
        params[i] -= rate * (m / correction1) / (std::sqrt(v / correction2) + c.epsilon);
    }
}

}  // namespace emhnet
