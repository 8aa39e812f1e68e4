#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "emhnet/emhnet.hpp"

namespace testing_support {

/// Relative error with an absolute floor on the denominator.
inline double rel_err(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central finite difference of f in coordinate i of x.
inline double central_difference(const std::function<double(std::span<const double>)>& f, std::vector<double> x,
                                 std::size_t i, double h = 1e-5) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    return (up - down) / (2.0 * h);
}

/// Series with the given values on consecutive month ends starting 2000-01-31.
inline emhnet::PriceSeries make_series(std::string ticker, std::vector<double> values,
                                       emhnet::Frequency f = emhnet::Frequency::monthly,
                                       emhnet::Date start = {2000, 1, 31}) {
    emhnet::PriceSeries s;
    s.ticker = std::move(ticker);
    s.frequency = f;
    s.values = std::move(values);
    for (std::size_t i = 0; i < s.values.size(); ++i)
        s.dates.push_back(emhnet::month_end_after(start, int(i) * emhnet::months_per_step(f)));
    return s;
}

/// Fresh, empty scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string label = name;
    if (info) label = std::string(info->test_suite_name()) + "_" + info->name() + "_" + name;
    auto dir = std::filesystem::temp_directory_path() / "emhnet_tests" / label;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// CSV body for a series with the given closes on consecutive month ends.
inline std::string monthly_csv(std::size_t length, double start_price = 100.0, double growth = 1.01) {
    std::ostringstream out;
    out << "date,close\n";
    double p = start_price;
    for (std::size_t i = 0; i < length; ++i) {
        out << emhnet::to_string(emhnet::month_end_after({2000, 1, 31}, int(i))) << ',' << emhnet::format_real(p)
            << '\n';
        p *= growth;
    }
    return out.str();
}

}  // namespace testing_support
