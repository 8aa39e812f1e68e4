#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "emhnet/date.hpp"
#include "emhnet/error.hpp"
#include "emhnet/random.hpp"
#include "emhnet/series.hpp"

namespace emhnet {

/// Log-price with iid Gaussian increments: r_t = sigma * e_t.
struct RandomWalk {
    double sigma = 0.05;
};

/// Log-returns r_t = phi * r_{t-1} + sigma * e_t, started from the stationary law.
struct Ar1Returns {
    double phi = 0.0;
    double sigma = 0.05;
};

/// Log-returns r_t = sum_k a_k r_{t-k} + sigma * e_t after a burn-in of
/// 100 * p steps from zero.
struct ArpReturns {
    std::vector<double> coefficients;
    double sigma = 0.05;
};

struct GeneratorSpec {
    std::variant<RandomWalk, Ar1Returns, ArpReturns> kind = RandomWalk{};
    std::size_t length = 100;  ///< number of prices
    double initial_log_price = 4.605170185988092;  // ln 100
    std::uint64_t seed = 0;
    std::string ticker = "SYN";
    Frequency frequency = Frequency::monthly;
    Date start{1980, 1, 31};
};

/// Largest modulus among the roots of the AR companion matrix.
inline double companion_spectral_radius(const std::vector<double>& coefficients) {
    const auto p = static_cast<Eigen::Index>(coefficients.size());
    if (p == 0) return 0.0;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index k = 0; k < p; ++k) companion(0, k) = coefficients[std::size_t(k)];
    for (Eigen::Index k = 1; k < p; ++k) companion(k, k - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

inline void validate(const GeneratorSpec& spec) {
    auto check_sigma = [](double s) {
        if (!(s > 0.0) || !std::isfinite(s)) throw SpecError("sigma must be positive");
    };
    if (spec.length < 2) throw SpecError("generated series need at least two prices");
    if (!std::isfinite(spec.initial_log_price)) throw SpecError("initial log-price must be finite");
    if (const auto* rw = std::get_if<RandomWalk>(&spec.kind)) check_sigma(rw->sigma);
    if (const auto* ar = std::get_if<Ar1Returns>(&spec.kind)) {
        check_sigma(ar->sigma);
        if (!(std::abs(ar->phi) < 1.0)) throw SpecError("AR(1) coefficient must satisfy |phi| < 1");
    }
    if (const auto* ar = std::get_if<ArpReturns>(&spec.kind)) {
        check_sigma(ar->sigma);
        if (ar->coefficients.empty()) throw SpecError("AR(p) needs at least one coefficient");
        if (!(companion_spectral_radius(ar->coefficients) < 1.0))
            throw SpecError("AR(p) coefficients are outside the stationarity region");
    }
}

/// Month-end dated price path; deterministic in spec.seed.
inline PriceSeries generate(const GeneratorSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);
    const std::size_t n_returns = spec.length - 1;
    std::vector<double> returns(n_returns);
    if (const auto* rw = std::get_if<RandomWalk>(&spec.kind)) {
        for (auto& r : returns) r = rw->sigma * rng.normal();
    } else if (const auto* ar = std::get_if<Ar1Returns>(&spec.kind)) {
        double prev = 0.0;
        for (std::size_t t = 0; t < n_returns; ++t) {
            const double e = ar->sigma * rng.normal();
            prev = t == 0 ? e / std::sqrt(1.0 - ar->phi * ar->phi) : ar->phi * prev + e;
            returns[t] = prev;
        }
    } else {
        const auto& arp = std::get<ArpReturns>(spec.kind);
        const std::size_t p = arp.coefficients.size();
        const std::size_t burn = 100 * p;
        std::vector<double> path(burn + n_returns, 0.0);
        for (std::size_t t = 0; t < path.size(); ++t) {
            double v = arp.sigma * rng.normal();
            for (std::size_t k = 1; k <= p && k <= t; ++k) v += arp.coefficients[k - 1] * path[t - k];
            path[t] = v;
        }
        std::copy(path.begin() + std::ptrdiff_t(burn), path.end(), returns.begin());
    }

    PriceSeries s;
    s.ticker = spec.ticker;
    s.frequency = spec.frequency;
    s.dates.reserve(spec.length);
    s.values.reserve(spec.length);
    const int step = months_per_step(spec.frequency);
    Date first = spec.start;
    first.day = days_in_month(first.year, first.month);
    double log_price = spec.initial_log_price;
    for (std::size_t t = 0; t < spec.length; ++t) {
        if (t > 0) log_price += returns[t - 1];
        s.dates.push_back(month_end_after(first, int(t) * step));
        s.values.push_back(std::exp(log_price));
    }
    return s;
}

}  // namespace emhnet
