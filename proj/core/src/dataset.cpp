#include "idxf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "idxf/csv.hpp"
#include "idxf/errors.hpp"

namespace idxf {

Scaler::Scaler(Eigen::VectorXd mins, Eigen::VectorXd maxs) : mins_(std::move(mins)), maxs_(std::move(maxs))
{
    if (mins_.size() != maxs_.size() || mins_.size() == 0)
        throw std::invalid_argument("scaler: mins and maxs must be non-empty and equally sized");
    if (!mins_.allFinite() || !maxs_.allFinite() || (maxs_.array() < mins_.array()).any())
        throw std::invalid_argument("scaler: need finite bounds with max >= min");
}

Scaler Scaler::fit(const Eigen::MatrixXd& rows)
{
    if (rows.rows() == 0 || rows.cols() == 0)
        throw std::invalid_argument("scaler: cannot fit on an empty matrix");
    return Scaler(rows.colwise().minCoeff().transpose(), rows.colwise().maxCoeff().transpose());
}

void Scaler::require_fitted(Eigen::Index cols) const
{
    if (!fitted())
        throw std::logic_error("scaler used before fit");
    if (cols != mins_.size())
        throw std::invalid_argument(fmt::format("scaler fitted on {} features, got {}", mins_.size(), cols));
}

double Scaler::transform(double x, std::size_t f) const
{
    require_fitted(mins_.size());
    const auto i = static_cast<Eigen::Index>(f);
    const double range = maxs_(i) - mins_(i);
    return range > 0.0 ? (x - mins_(i)) / range : 0.5;
}

double Scaler::inverse(double x, std::size_t f) const
{
    require_fitted(mins_.size());
    const auto i = static_cast<Eigen::Index>(f);
    const double range = maxs_(i) - mins_(i);
    return range > 0.0 ? x * range + mins_(i) : mins_(i);
}

Eigen::MatrixXd Scaler::transform(const Eigen::MatrixXd& rows) const
{
    require_fitted(rows.cols());
    Eigen::MatrixXd out(rows.rows(), rows.cols());
    for (Eigen::Index c = 0; c < rows.cols(); ++c)
        for (Eigen::Index r = 0; r < rows.rows(); ++r)
            out(r, c) = transform(rows(r, c), static_cast<std::size_t>(c));
    return out;
}

Eigen::MatrixXd Scaler::inverse(const Eigen::MatrixXd& rows) const
{
    require_fitted(rows.cols());
    Eigen::MatrixXd out(rows.rows(), rows.cols());
    for (Eigen::Index c = 0; c < rows.cols(); ++c)
        for (Eigen::Index r = 0; r < rows.rows(); ++r)
            out(r, c) = inverse(rows(r, c), static_cast<std::size_t>(c));
    return out;
}

WindowedDataset make_windows(const AlignedPanel& series, std::size_t lookback, std::size_t target_feature)
{
    if (lookback == 0)
        throw std::invalid_argument("make_windows: lookback must be positive");
    if (series.rows() <= lookback)
        throw std::invalid_argument(
            fmt::format("make_windows: series length {} must exceed lookback {}", series.rows(), lookback));
    if (target_feature >= series.cols())
        throw std::invalid_argument("make_windows: target feature out of range");

    WindowedDataset ds;
    ds.feature_names = series.tickers();
    ds.target_feature = target_feature;
    ds.lookback = lookback;
    const auto n = series.rows() - lookback;
    const auto& v = series.values();
    const auto lb = static_cast<Eigen::Index>(lookback);
    ds.X.reserve(n);
    ds.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < n; ++s) {
        const auto row = static_cast<Eigen::Index>(s);
        ds.X.emplace_back(v.middleRows(row, lb));
        ds.y(row) = v(row + lb, static_cast<Eigen::Index>(target_feature));
    }
    return ds;
}

namespace {

WindowedDataset subset(const WindowedDataset& ds, std::size_t begin, std::size_t end)
{
    WindowedDataset out;
    out.feature_names = ds.feature_names;
    out.target_feature = ds.target_feature;
    out.lookback = ds.lookback;
    out.X.assign(ds.X.begin() + static_cast<std::ptrdiff_t>(begin), ds.X.begin() + static_cast<std::ptrdiff_t>(end));
    out.y = ds.y.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    return out;
}

void apply_scaler(WindowedDataset& ds, const Scaler& scaler)
{
    for (auto& x : ds.X)
        x = scaler.transform(x);
    for (Eigen::Index i = 0; i < ds.y.size(); ++i)
        ds.y(i) = scaler.transform(ds.y(i), ds.target_feature);
    ds.scaler = scaler;
}

} // namespace

DatasetSplit chronological_split(const WindowedDataset& input, double train_fraction)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument(fmt::format("chronological_split: fraction {} outside (0, 1)", train_fraction));
    const auto n = input.samples();
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n)
        throw std::invalid_argument(
            fmt::format("chronological_split: {} samples at fraction {} leaves an empty split", n, train_fraction));

    // Work on raw values; a previously scaled dataset is unscaled first.
    WindowedDataset raw = input;
    if (raw.scaler.fitted()) {
        for (auto& x : raw.X)
            x = raw.scaler.inverse(x);
        for (Eigen::Index i = 0; i < raw.y.size(); ++i)
            raw.y(i) = raw.scaler.inverse(raw.y(i), raw.target_feature);
        raw.scaler = Scaler{};
    }

    // Rows covered by training windows: the first window, then each later window's last row.
    const auto f = static_cast<Eigen::Index>(raw.features());
    const auto lb = static_cast<Eigen::Index>(raw.lookback);
    Eigen::MatrixXd rows(lb + static_cast<Eigen::Index>(n_train) - 1, f);
    rows.topRows(lb) = raw.X[0];
    for (std::size_t s = 1; s < n_train; ++s)
        rows.row(lb + static_cast<Eigen::Index>(s) - 1) = raw.X[s].row(lb - 1);
    Eigen::VectorXd mins = rows.colwise().minCoeff().transpose();
    Eigen::VectorXd maxs = rows.colwise().maxCoeff().transpose();
    const auto tf = static_cast<Eigen::Index>(raw.target_feature);
    const auto train_targets = raw.y.head(static_cast<Eigen::Index>(n_train));
    mins(tf) = std::min(mins(tf), train_targets.minCoeff());
    maxs(tf) = std::max(maxs(tf), train_targets.maxCoeff());
    const Scaler scaler(std::move(mins), std::move(maxs));

    DatasetSplit out{subset(raw, 0, n_train), subset(raw, n_train, n)};
    apply_scaler(out.train, scaler);
    apply_scaler(out.test, scaler);
    return out;
}

AlignedPanel assemble_feature_matrix(const TimeSeries& index_returns, std::span<const TimeSeries> factor_levels,
                                     FactorMode mode)
{
    std::vector<TimeSeries> all;
    all.push_back(index_returns);
    all.insert(all.end(), factor_levels.begin(), factor_levels.end());
    const auto filled = align_calendars(all, AlignPolicy::forward_fill);

    // Keep only real index dates.
    std::vector<Eigen::Index> keep;
    {
        const auto idx_dates = index_returns.dates();
        std::size_t j = 0;
        for (std::size_t r = 0; r < filled.rows(); ++r) {
            while (j < idx_dates.size() && idx_dates[j] < filled.dates()[r])
                ++j;
            if (j < idx_dates.size() && idx_dates[j] == filled.dates()[r])
                keep.push_back(static_cast<Eigen::Index>(r));
        }
    }
    const std::size_t first = mode == FactorMode::returns ? 1 : 0;
    if (keep.size() <= first + 1)
        throw std::invalid_argument("assemble_feature_matrix: too few overlapping dates between index and factors");

    const auto cols = static_cast<Eigen::Index>(all.size());
    Eigen::MatrixXd values(static_cast<Eigen::Index>(keep.size() - first), cols);
    std::vector<Date> dates;
    for (std::size_t k = first; k < keep.size(); ++k) {
        const auto out_row = static_cast<Eigen::Index>(k - first);
        dates.push_back(filled.dates()[static_cast<std::size_t>(keep[k])]);
        values(out_row, 0) = filled.values()(keep[k], 0);
        for (Eigen::Index c = 1; c < cols; ++c) {
            const double level = filled.values()(keep[k], c);
            if (mode == FactorMode::levels) {
                values(out_row, c) = level;
            } else {
                const double prev = filled.values()(keep[k - 1], c);
                if (prev == 0.0)
                    throw std::invalid_argument(fmt::format("assemble_feature_matrix: zero level in factor '{}'",
                                                            filled.tickers()[static_cast<std::size_t>(c)]));
                values(out_row, c) = (level - prev) / prev;
            }
        }
    }
    return AlignedPanel(filled.tickers(), std::move(dates), std::move(values));
}

AlignedPanel index_only(const AlignedPanel& features)
{
    return AlignedPanel({features.tickers().front()}, features.dates(), features.values().leftCols(1));
}

std::string dataset_to_csv(const WindowedDataset& ds)
{
    std::string out = "sample,lag";
    for (const auto& name : ds.feature_names)
        out += "," + name;
    out += ",target:" + ds.feature_names.at(ds.target_feature) + "\n";
    for (std::size_t s = 0; s < ds.samples(); ++s) {
        const std::string target = csv::format_exact(ds.y(static_cast<Eigen::Index>(s)));
        for (Eigen::Index lag = 0; lag < ds.X[s].rows(); ++lag) {
            out += fmt::format("{},{}", s, lag);
            for (Eigen::Index f = 0; f < ds.X[s].cols(); ++f)
                out += "," + csv::format_exact(ds.X[s](lag, f));
            out += "," + target + "\n";
        }
    }
    return out;
}

void write_dataset_csv(const std::filesystem::path& path, const WindowedDataset& ds)
{
    csv::write_atomic(path, dataset_to_csv(ds));
}

WindowedDataset read_dataset_csv(const std::filesystem::path& path)
{
    const auto lines = csv::read_lines(path);
    const std::string where = path.filename().string();
    if (lines.empty())
        throw ParseError(where + ": empty dataset file", 1);
    const auto header = csv::split_row(lines[0]);
    if (header.size() < 4 || header[0] != "sample" || header[1] != "lag" || !header.back().starts_with("target:"))
        throw ParseError(where + ": header must be sample,lag,<features...>,target:<name>", 1);

    WindowedDataset ds;
    ds.feature_names.assign(header.begin() + 2, header.end() - 1);
    const std::string target_name = header.back().substr(7);
    const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), target_name);
    if (it == ds.feature_names.end())
        throw ParseError(where + ": target feature '" + target_name + "' is not a feature column", 1);
    ds.target_feature = static_cast<std::size_t>(it - ds.feature_names.begin());

    const auto f = ds.feature_names.size();
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    std::size_t expected_sample = 0, expected_lag = 0;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (csv::trim(lines[ln]).empty())
            continue;
        const auto cells = csv::split_row(lines[ln]);
        if (cells.size() != header.size())
            throw ParseError(fmt::format("{}:{}: expected {} fields", where, ln + 1, header.size()), ln + 1);
        double sample = 0.0, lag = 0.0;
        if (!csv::parse_double(cells[0], sample) || !csv::parse_double(cells[1], lag))
            throw ParseError(fmt::format("{}:{}: bad sample/lag index", where, ln + 1), ln + 1);
        if (lag == 0.0 && ln > 1) {
            if (ds.lookback == 0)
                ds.lookback = expected_lag;
            if (expected_lag != ds.lookback)
                throw ParseError(fmt::format("{}:{}: sample {} has {} lags, expected {}", where, ln + 1,
                                             expected_sample, expected_lag, ds.lookback),
                                 ln + 1);
            ++expected_sample;
            expected_lag = 0;
        }
        if (sample != static_cast<double>(expected_sample) || lag != static_cast<double>(expected_lag))
            throw ParseError(fmt::format("{}:{}: rows out of order", where, ln + 1), ln + 1);
        std::vector<double> row(f);
        for (std::size_t c = 0; c < f; ++c)
            if (!csv::parse_double(cells[c + 2], row[c]))
                throw ParseError(fmt::format("{}:{}: cannot parse '{}'", where, ln + 1, cells[c + 2]), ln + 1);
        double target = 0.0;
        if (!csv::parse_double(cells.back(), target))
            throw ParseError(fmt::format("{}:{}: cannot parse target", where, ln + 1), ln + 1);
        if (lag == 0.0)
            targets.push_back(target);
        rows.push_back(std::move(row));
        ++expected_lag;
    }
    if (rows.empty())
        throw ParseError(where + ": dataset has no rows");
    if (ds.lookback == 0)
        ds.lookback = expected_lag;
    if (expected_lag != ds.lookback)
        throw ParseError(where + ": last sample is incomplete");

    const auto lb = static_cast<Eigen::Index>(ds.lookback);
    ds.y.resize(static_cast<Eigen::Index>(targets.size()));
    for (std::size_t s = 0; s < targets.size(); ++s) {
        Eigen::MatrixXd x(lb, static_cast<Eigen::Index>(f));
        for (Eigen::Index l = 0; l < lb; ++l)
            for (std::size_t c = 0; c < f; ++c)
                x(l, static_cast<Eigen::Index>(c)) = rows[s * ds.lookback + static_cast<std::size_t>(l)][c];
        ds.X.push_back(std::move(x));
        ds.y(static_cast<Eigen::Index>(s)) = targets[s];
    }
    return ds;
}

} // namespace idxf
