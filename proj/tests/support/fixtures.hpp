#pragma once

// Synthetic series shared by the forecasting tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "idxf/market_data.hpp"

namespace fixtures {

inline idxf::Date start_date()
{
    using namespace std::chrono;
    return idxf::Date{year{2008} / September / day{22}};
}

/// One column: amplitude * sin(2 pi t / period) + N(0, noise^2).
inline idxf::AlignedPanel sine_panel(std::size_t days, double noise, std::uint64_t seed, double period = 25.0,
                                     double amplitude = 1.0)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> eps(0.0, 1.0);
    Eigen::MatrixXd v(static_cast<Eigen::Index>(days), 1);
    for (std::size_t t = 0; t < days; ++t)
        v(static_cast<Eigen::Index>(t), 0) =
            amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period) + noise * eps(rng);
    return idxf::AlignedPanel({"INDEX"}, idxf::business_days(start_date(), days), std::move(v));
}

/// Index column driven by yesterday's observed factors plus noise; factor
/// columns are i.i.d. Gaussian. Column 0 is the index.
inline idxf::AlignedPanel factor_coupled_panel(std::size_t days, std::size_t factors, double noise, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd v(static_cast<Eigen::Index>(days), static_cast<Eigen::Index>(factors + 1));
    for (Eigen::Index t = 0; t < v.rows(); ++t)
        for (Eigen::Index f = 1; f < v.cols(); ++f)
            v(t, f) = z(rng);
    for (Eigen::Index t = 0; t < v.rows(); ++t) {
        double mix = 0.0;
        if (t > 0)
            for (Eigen::Index f = 1; f < v.cols(); ++f)
                mix += v(t - 1, f) * (f % 2 == 0 ? 0.6 : -0.4) / std::sqrt(static_cast<double>(factors));
        v(t, 0) = mix + noise * z(rng);
    }
    std::vector<std::string> names{"INDEX"};
    for (std::size_t f = 0; f < factors; ++f)
        names.push_back("F" + std::to_string(f));
    return idxf::AlignedPanel(std::move(names), idxf::business_days(start_date(), days), std::move(v));
}

} // namespace fixtures
