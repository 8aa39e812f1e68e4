#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "emhnet/random.hpp"

namespace emhnet::detail {

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
inline void fill_uniform_fan_in(std::span<double> values, std::size_t fan_in, Rng& rng) {
    const double r = 1.0 / std::sqrt(double(fan_in));
    for (auto& v : values) v = rng.uniform(-r, r);
}

}  // namespace emhnet::detail
