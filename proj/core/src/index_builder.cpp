#include "idxf/index_builder.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "idxf/csv.hpp"
#include "idxf/errors.hpp"

namespace idxf {

TimeSeries IndexSeries::as_series(std::string name) const { return TimeSeries(std::move(name), dates, returns); }

IndexSeries build_index(const Weights& weights, const AlignedPanel& panel)
{
    std::vector<Eigen::Index> cols;
    cols.reserve(weights.size());
    for (const auto& t : weights.tickers()) {
        const auto it = std::find(panel.tickers().begin(), panel.tickers().end(), t);
        if (it == panel.tickers().end())
            throw std::invalid_argument(fmt::format("build_index: ticker '{}' missing from the return panel", t));
        cols.push_back(static_cast<Eigen::Index>(it - panel.tickers().begin()));
    }
    const auto& v = panel.values();
    std::vector<double> out(panel.rows(), 0.0);
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < cols.size(); ++i)
            s += weights[i] * v(static_cast<Eigen::Index>(r), cols[i]);
        out[r] = s;
    }
    return IndexSeries{panel.dates(), std::move(out), weights};
}

Weights heavy_machinery_weights()
{
    std::vector<std::string> tickers{"CAT", "DE", "CNHI", "AGCO", "TEX", "ASTE", "MTW", "KMTUY"};
    Eigen::VectorXd w(8);
    w << 0.0777, 0.0651, 0.1162, 0.012, 0.0978, 0.2071, 0.1036, 0.3206;
    w /= w.sum();
    return Weights(std::move(tickers), std::move(w));
}

std::string index_to_csv(const IndexSeries& index)
{
    std::string out = "date,return\n";
    for (std::size_t i = 0; i < index.dates.size(); ++i)
        out += format_date(index.dates[i]) + "," + csv::format_exact(index.returns[i]) + "\n";
    return out;
}

void write_index_csv(const std::filesystem::path& path, const IndexSeries& index)
{
    csv::write_atomic(path, index_to_csv(index));
}

TimeSeries read_index_csv(const std::filesystem::path& path, std::string name)
{
    const auto panel = read_panel_csv(path);
    if (panel.cols() != 1)
        throw ParseError(path.filename().string() + ": index file must have exactly one value column", 1);
    const auto s = panel.series(0);
    return TimeSeries(std::move(name), panel.dates(), std::vector<double>(s.values().begin(), s.values().end()));
}

} // namespace idxf
