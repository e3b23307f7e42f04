#pragma once

// Constituent selection: per-company metrics, min-max normalization and the
// weighted composite score used to rank the universe.

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "idxf/market_data.hpp"

namespace idxf {

/// Raw or normalized metrics for one company. After normalize_metrics(),
/// `beta` holds the rescaled |beta - 1| term.
struct MetricVector {
    std::string ticker;
    double economic_impact = 0.0;     // market capitalisation
    double global_reach = 0.0;        // international share of sales, [0,1]
    double capital_expenditure = 0.0; // annual CapEx
    double beta = 0.0;
    double kpi = 0.0;                 // user supplied
    double volatility = 0.0;          // sample std-dev of daily returns

    void validate() const;
};

class SelectionWeights {
public:
    /// Equal weights 1/6.
    SelectionWeights();
    explicit SelectionWeights(std::array<double, 6> w);

    const std::array<double, 6>& values() const noexcept { return w_; }

private:
    std::array<double, 6> w_;
};

/// Cov(asset, market) / Var(market), both with the n-1 estimator.
double beta(std::span<const double> asset_returns, std::span<const double> market_returns);
double beta(const ReturnSeries& asset, const ReturnSeries& market);

/// Sample standard deviation (n-1).
double volatility(std::span<const double> returns);
double volatility(const ReturnSeries& returns);

/// Per-metric min-max rescale to [0,1] across the universe. Beta is replaced by
/// |beta - 1| before rescaling. A metric constant over the universe maps to 0.5.
std::vector<MetricVector> normalize_metrics(std::span<const MetricVector> universe);

double selection_score(const MetricVector& normalized, const SelectionWeights& w);

using ScoredTicker = std::pair<std::string, double>;

/// Top `k` tickers, descending score, ties by ascending ticker.
std::vector<std::string> rank_universe(std::span<const ScoredTicker> scores, std::size_t k);

/// Fundamentals file: ticker, market_cap, intl_sales, total_sales, capex, kpi.
/// Beta and volatility are left at 0 for the caller to fill from prices.
std::vector<MetricVector> load_metrics_csv(const std::filesystem::path& path);

} // namespace idxf
