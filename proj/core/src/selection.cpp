#include "idxf/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "idxf/csv.hpp"
#include "idxf/errors.hpp"

namespace idxf {

void MetricVector::validate() const
{
    const double all[] = {economic_impact, global_reach, capital_expenditure, beta, kpi, volatility};
    for (const double v : all)
        if (!std::isfinite(v))
            throw std::invalid_argument(ticker + ": non-finite metric");
    if (global_reach < 0.0 || global_reach > 1.0)
        throw std::invalid_argument(fmt::format("{}: global reach {} outside [0,1]", ticker, global_reach));
    if (volatility < 0.0)
        throw std::invalid_argument(ticker + ": negative volatility");
}

SelectionWeights::SelectionWeights() : w_{} { w_.fill(1.0 / 6.0); }

SelectionWeights::SelectionWeights(std::array<double, 6> w) : w_(w)
{
    double sum = 0.0;
    for (const double v : w_) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("selection weights must be nonnegative and finite");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument(fmt::format("selection weights sum to {}, expected 1", sum));
}

namespace {

double mean(std::span<const double> x)
{
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Two-pass estimator on data shifted by its first value, so a constant series
// has exactly zero deviations.
double sample_cov(std::span<const double> x, std::span<const double> y)
{
    std::vector<double> dx(x.size()), dy(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        dx[i] = x[i] - x[0];
        dy[i] = y[i] - y[0];
    }
    const double mx = mean(dx);
    const double my = mean(dy);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += (dx[i] - mx) * (dy[i] - my);
    return s / static_cast<double>(x.size() - 1);
}

} // namespace

double beta(std::span<const double> asset_returns, std::span<const double> market_returns)
{
    if (asset_returns.size() != market_returns.size())
        throw std::invalid_argument(fmt::format("beta: length mismatch ({} vs {})", asset_returns.size(),
                                                market_returns.size()));
    if (asset_returns.size() < 2)
        throw std::invalid_argument("beta: need at least 2 observations");
    const double var_m = sample_cov(market_returns, market_returns);
    if (!(var_m > 0.0))
        throw std::invalid_argument("beta: market returns have zero variance");
    return sample_cov(asset_returns, market_returns) / var_m;
}

double beta(const ReturnSeries& asset, const ReturnSeries& market)
{
    return beta(asset.values(), market.values());
}

double volatility(std::span<const double> returns)
{
    if (returns.size() < 2)
        throw std::invalid_argument("volatility: need at least 2 observations");
    return std::sqrt(sample_cov(returns, returns));
}

double volatility(const ReturnSeries& returns) { return volatility(returns.values()); }

std::vector<MetricVector> normalize_metrics(std::span<const MetricVector> universe)
{
    if (universe.size() < 2)
        throw std::invalid_argument("normalize_metrics: need at least 2 companies");
    for (const auto& m : universe)
        m.validate();

    std::vector<MetricVector> out(universe.begin(), universe.end());
    for (auto& m : out)
        m.beta = std::abs(m.beta - 1.0);

    auto rescale = [&](double MetricVector::*field) {
        double lo = out[0].*field;
        double hi = lo;
        for (const auto& m : out) {
            lo = std::min(lo, m.*field);
            hi = std::max(hi, m.*field);
        }
        for (auto& m : out)
            m.*field = hi > lo ? (m.*field - lo) / (hi - lo) : 0.5;
    };
    rescale(&MetricVector::economic_impact);
    rescale(&MetricVector::global_reach);
    rescale(&MetricVector::capital_expenditure);
    rescale(&MetricVector::beta);
    rescale(&MetricVector::kpi);
    rescale(&MetricVector::volatility);
    return out;
}

double selection_score(const MetricVector& m, const SelectionWeights& w)
{
    const auto& v = w.values();
    return v[0] * m.economic_impact + v[1] * m.global_reach + v[2] * m.capital_expenditure + v[3] * m.beta +
           v[4] * m.kpi + v[5] * m.volatility;
}

std::vector<std::string> rank_universe(std::span<const ScoredTicker> scores, std::size_t k)
{
    if (k > scores.size())
        throw std::invalid_argument(fmt::format("cannot select {} constituents from a universe of {}", k, scores.size()));
    std::vector<ScoredTicker> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end(), [](const ScoredTicker& a, const ScoredTicker& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        out.push_back(sorted[i].first);
    return out;
}

std::vector<MetricVector> load_metrics_csv(const std::filesystem::path& path)
{
    const auto lines = csv::read_lines(path);
    const std::string where = path.filename().string();
    if (lines.empty())
        throw ParseError(where + ": empty metrics file", 1);
    const auto header = csv::split_row(lines[0]);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i)
        col[std::string(csv::trim(header[i]))] = i;
    for (const char* name : {"ticker", "market_cap", "intl_sales", "total_sales", "capex", "kpi"})
        if (!col.contains(name))
            throw ParseError(fmt::format("{}: missing column '{}'", where, name), 1);

    std::vector<MetricVector> out;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (csv::trim(lines[ln]).empty())
            continue;
        const auto cells = csv::split_row(lines[ln]);
        if (cells.size() != header.size())
            throw ParseError(fmt::format("{}:{}: expected {} fields, got {}", where, ln + 1, header.size(), cells.size()),
                             ln + 1);
        auto num = [&](const char* name) {
            double v = 0.0;
            if (!csv::parse_double(cells[col[name]], v))
                throw ParseError(fmt::format("{}:{}: cannot parse {} '{}'", where, ln + 1, name, cells[col[name]]),
                                 ln + 1);
            return v;
        };
        MetricVector m;
        m.ticker = std::string(csv::trim(cells[col["ticker"]]));
        m.economic_impact = num("market_cap");
        const double intl = num("intl_sales");
        const double total = num("total_sales");
        if (!(total > 0.0))
            throw ParseError(fmt::format("{}:{}: total_sales must be positive", where, ln + 1), ln + 1);
        m.global_reach = intl / total;
        m.capital_expenditure = num("capex");
        m.kpi = num("kpi");
        try {
            m.validate();
        } catch (const std::invalid_argument& e) {
            throw ParseError(fmt::format("{}:{}: {}", where, ln + 1, e.what()), ln + 1);
        }
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace idxf
