#include "idxf/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "idxf/csv.hpp"
#include "idxf/errors.hpp"

namespace idxf {

namespace chr = std::chrono;

Date parse_date(std::string_view text)
{
    text = csv::trim(text);
    auto bad = [&] { return std::invalid_argument(fmt::format("invalid date '{}' (expected YYYY-MM-DD)", text)); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw bad();
    int y = 0;
    unsigned m = 0, d = 0;
    auto field = [&](std::size_t pos, std::size_t len, auto& out) {
        const auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
        if (ec != std::errc{} || p != text.data() + pos + len)
            throw bad();
    };
    field(0, 4, y);
    field(5, 2, m);
    field(8, 2, d);
    const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
    if (!ymd.ok())
        throw bad();
    return Date{ymd};
}

std::string format_date(Date d)
{
    const chr::year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

PriceSeries::PriceSeries(std::string ticker, std::vector<PriceBar> bars)
    : ticker_(std::move(ticker)), bars_(std::move(bars))
{
    if (bars_.size() < 2)
        throw std::invalid_argument(fmt::format("{}: a price series needs at least 2 bars", ticker_));
    for (std::size_t i = 0; i < bars_.size(); ++i) {
        const auto& b = bars_[i];
        if (!(b.close > 0.0) || !(b.adjusted_close > 0.0) || !std::isfinite(b.close) ||
            !std::isfinite(b.adjusted_close))
            throw std::invalid_argument(fmt::format("{}: non-positive price on {}", ticker_, format_date(b.date)));
        if (!(b.dividend >= 0.0) || !std::isfinite(b.dividend))
            throw std::invalid_argument(fmt::format("{}: negative dividend on {}", ticker_, format_date(b.date)));
        if (i > 0 && !(bars_[i - 1].date < b.date))
            throw std::invalid_argument(fmt::format("{}: dates not strictly increasing at {}", ticker_,
                                                    format_date(b.date)));
    }
}

TimeSeries::TimeSeries(std::string ticker, std::vector<Date> dates, std::vector<double> values)
    : ticker_(std::move(ticker)), dates_(std::move(dates)), values_(std::move(values))
{
    if (dates_.size() != values_.size())
        throw std::invalid_argument(fmt::format("{}: {} dates but {} values", ticker_, dates_.size(), values_.size()));
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw std::invalid_argument(fmt::format("{}: non-finite value on {}", ticker_, format_date(dates_[i])));
        if (i > 0 && !(dates_[i - 1] < dates_[i]))
            throw std::invalid_argument(fmt::format("{}: dates not strictly increasing at {}", ticker_,
                                                    format_date(dates_[i])));
    }
}

TimeSeries price_column(const PriceSeries& series, PriceField field)
{
    std::vector<Date> dates;
    std::vector<double> values;
    dates.reserve(series.size());
    values.reserve(series.size());
    for (const auto& b : series.bars()) {
        dates.push_back(b.date);
        values.push_back(field == PriceField::close ? b.close : b.adjusted_close);
    }
    return TimeSeries(series.ticker(), std::move(dates), std::move(values));
}

AlignedPanel::AlignedPanel(std::vector<std::string> tickers, std::vector<Date> dates, Eigen::MatrixXd values)
    : tickers_(std::move(tickers)), dates_(std::move(dates)), values_(std::move(values))
{
    if (static_cast<std::size_t>(values_.rows()) != dates_.size() ||
        static_cast<std::size_t>(values_.cols()) != tickers_.size())
        throw std::invalid_argument(fmt::format("panel shape {}x{} does not match {} dates x {} tickers",
                                                values_.rows(), values_.cols(), dates_.size(), tickers_.size()));
    if (!values_.allFinite())
        throw std::invalid_argument("panel contains non-finite values");
    for (std::size_t i = 1; i < dates_.size(); ++i)
        if (!(dates_[i - 1] < dates_[i]))
            throw std::invalid_argument("panel dates not strictly increasing at " + format_date(dates_[i]));
}

std::size_t AlignedPanel::column(std::string_view ticker) const
{
    const auto it = std::find(tickers_.begin(), tickers_.end(), ticker);
    if (it == tickers_.end())
        throw std::out_of_range(fmt::format("ticker '{}' not in panel", ticker));
    return static_cast<std::size_t>(it - tickers_.begin());
}

TimeSeries AlignedPanel::series(std::size_t col) const
{
    std::vector<double> v(dates_.size());
    for (std::size_t r = 0; r < dates_.size(); ++r)
        v[r] = values_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col));
    return TimeSeries(tickers_.at(col), dates_, std::move(v));
}

PriceSeries load_price_csv(const std::filesystem::path& path, std::string ticker, const CsvSchema& schema)
{
    const auto lines = csv::read_lines(path);
    const std::string where = path.filename().string();
    if (lines.empty())
        throw ParseError(where + ": empty file (header row required)", 1);

    const auto header = csv::split_row(lines[0]);
    auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
        if (name.empty())
            return std::nullopt;
        for (std::size_t i = 0; i < header.size(); ++i)
            if (csv::trim(header[i]) == name)
                return i;
        return std::nullopt;
    };
    const auto date_col = find_col(schema.date);
    const auto close_col = find_col(schema.close);
    if (!date_col || !close_col)
        throw ParseError(fmt::format("{}: header must contain '{}' and '{}'", where, schema.date, schema.close), 1);
    const auto adj_col = find_col(schema.adjusted_close);
    const auto div_col = find_col(schema.dividend);

    std::vector<PriceBar> bars;
    std::map<Date, std::size_t> seen;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (csv::trim(lines[ln]).empty())
            continue;
        const std::size_t line_no = ln + 1;
        const auto cells = csv::split_row(lines[ln]);
        auto cell = [&](std::size_t c) -> std::string_view {
            if (c >= cells.size())
                throw ParseError(fmt::format("{}:{}: row has {} fields, expected at least {}", where, line_no,
                                             cells.size(), c + 1),
                                 line_no);
            return cells[c];
        };
        auto number = [&](std::size_t c, const std::string& name) {
            double v = 0.0;
            if (!csv::parse_double(cell(c), v))
                throw ParseError(fmt::format("{}:{}: cannot parse {} '{}'", where, line_no, name, cell(c)), line_no);
            return v;
        };

        PriceBar bar;
        try {
            bar.date = parse_date(cell(*date_col));
        } catch (const std::invalid_argument& e) {
            throw ParseError(fmt::format("{}:{}: {}", where, line_no, e.what()), line_no);
        }
        bar.close = number(*close_col, schema.close);
        bar.adjusted_close = adj_col ? number(*adj_col, schema.adjusted_close) : bar.close;
        if (div_col && !csv::trim(cell(*div_col)).empty())
            bar.dividend = number(*div_col, schema.dividend);
        if (!(bar.close > 0.0) || !(bar.adjusted_close > 0.0))
            throw ParseError(fmt::format("{}:{}: non-positive price", where, line_no), line_no);
        if (bar.dividend < 0.0)
            throw ParseError(fmt::format("{}:{}: negative dividend", where, line_no), line_no);
        if (const auto [it, fresh] = seen.emplace(bar.date, line_no); !fresh)
            throw ParseError(fmt::format("{}:{}: duplicate date {} (first seen on line {})", where, line_no,
                                         format_date(bar.date), it->second),
                             line_no);
        bars.push_back(bar);
    }
    std::sort(bars.begin(), bars.end(), [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    if (bars.size() < 2)
        throw ParseError(where + ": at least 2 data rows required");
    return PriceSeries(std::move(ticker), std::move(bars));
}

ReturnSeries compute_returns(const PriceSeries& series, ReturnMode mode, PriceField field)
{
    const auto bars = series.bars();
    if (bars.size() < 2)
        throw std::invalid_argument(series.ticker() + ": returns need at least 2 bars");
    std::vector<Date> dates;
    std::vector<double> r;
    dates.reserve(bars.size() - 1);
    r.reserve(bars.size() - 1);
    for (std::size_t t = 1; t < bars.size(); ++t) {
        dates.push_back(bars[t].date);
        if (mode == ReturnMode::simple_with_dividends) {
            r.push_back((bars[t].close - bars[t - 1].close + bars[t].dividend) / bars[t - 1].close);
        } else {
            const double prev = field == PriceField::close ? bars[t - 1].close : bars[t - 1].adjusted_close;
            const double cur = field == PriceField::close ? bars[t].close : bars[t].adjusted_close;
            r.push_back((cur - prev) / prev);
        }
    }
    return ReturnSeries(series.ticker(), std::move(dates), std::move(r));
}

ReturnSeries compute_returns(const TimeSeries& prices)
{
    if (prices.size() < 2)
        throw std::invalid_argument(prices.ticker() + ": returns need at least 2 observations");
    const auto p = prices.values();
    const auto d = prices.dates();
    std::vector<Date> dates(d.begin() + 1, d.end());
    std::vector<double> r(p.size() - 1);
    for (std::size_t t = 1; t < p.size(); ++t) {
        if (p[t - 1] == 0.0)
            throw std::invalid_argument(fmt::format("{}: zero price on {}", prices.ticker(), format_date(d[t - 1])));
        r[t - 1] = (p[t] - p[t - 1]) / p[t - 1];
    }
    return ReturnSeries(prices.ticker(), std::move(dates), std::move(r));
}

AlignedPanel align_calendars(std::span<const TimeSeries> series, AlignPolicy policy)
{
    if (series.empty())
        throw std::invalid_argument("align_calendars: no series given");
    for (const auto& s : series)
        if (s.size() == 0)
            throw std::invalid_argument("align_calendars: series '" + s.ticker() + "' is empty");

    std::vector<std::string> tickers;
    for (const auto& s : series)
        tickers.push_back(s.ticker());

    std::vector<Date> dates;
    if (policy == AlignPolicy::intersect) {
        dates.assign(series[0].dates().begin(), series[0].dates().end());
        for (std::size_t k = 1; k < series.size(); ++k) {
            std::vector<Date> next;
            std::set_intersection(dates.begin(), dates.end(), series[k].dates().begin(), series[k].dates().end(),
                                  std::back_inserter(next));
            dates = std::move(next);
        }
        if (dates.empty())
            throw std::invalid_argument("align_calendars: the series share no common dates");
    } else {
        Date start = series[0].dates().front();
        std::set<Date> all;
        for (const auto& s : series) {
            start = std::max(start, s.dates().front());
            all.insert(s.dates().begin(), s.dates().end());
        }
        for (const Date d : all)
            if (d >= start)
                dates.push_back(d);
    }

    Eigen::MatrixXd values(static_cast<Eigen::Index>(dates.size()), static_cast<Eigen::Index>(series.size()));
    for (std::size_t c = 0; c < series.size(); ++c) {
        const auto sd = series[c].dates();
        const auto sv = series[c].values();
        std::size_t j = 0;
        for (std::size_t r = 0; r < dates.size(); ++r) {
            // Last observation on or before dates[r]; exists because dates start at every first observation.
            while (j + 1 < sd.size() && sd[j + 1] <= dates[r])
                ++j;
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = sv[j];
        }
    }
    return AlignedPanel(std::move(tickers), std::move(dates), std::move(values));
}

std::vector<Date> business_days(Date start, std::size_t count)
{
    std::vector<Date> out;
    out.reserve(count);
    Date d = start;
    while (out.size() < count) {
        const chr::weekday wd{d};
        if (wd != chr::Saturday && wd != chr::Sunday)
            out.push_back(d);
        d += chr::days{1};
    }
    return out;
}

AlignedPanel generate_synthetic_panel(std::size_t n_assets, std::size_t n_days, const BlockStructure& blocks,
                                      std::uint64_t seed)
{
    std::size_t total = 0;
    for (const auto s : blocks.cluster_sizes) {
        if (s == 0)
            throw std::invalid_argument("generate_synthetic_panel: empty cluster");
        total += s;
    }
    if (blocks.cluster_sizes.empty())
        total = n_assets;
    if (n_assets == 0 || total != n_assets)
        throw std::invalid_argument(
            fmt::format("generate_synthetic_panel: cluster sizes sum to {}, expected {}", total, n_assets));
    if (n_days == 0)
        throw std::invalid_argument("generate_synthetic_panel: n_days must be positive");
    if (!blocks.volatilities.empty() && blocks.volatilities.size() != n_assets)
        throw std::invalid_argument("generate_synthetic_panel: one volatility per asset required");

    std::vector<std::size_t> cluster_of(n_assets, 0);
    {
        std::size_t k = 0;
        for (std::size_t c = 0; c < blocks.cluster_sizes.size(); ++c)
            for (std::size_t i = 0; i < blocks.cluster_sizes[c]; ++i)
                cluster_of[k++] = c;
    }

    const auto n = static_cast<Eigen::Index>(n_assets);
    Eigen::MatrixXd target(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            target(i, j) = i == j ? 1.0
                           : cluster_of[static_cast<std::size_t>(i)] == cluster_of[static_cast<std::size_t>(j)]
                               ? blocks.intra_correlation
                               : blocks.inter_correlation;

    const Eigen::LLT<Eigen::MatrixXd> llt(target);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("generate_synthetic_panel: target correlation matrix is not positive definite");
    const Eigen::MatrixXd chol = llt.matrixL();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(n_days), n);
    Eigen::VectorXd z(n);
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
        for (Eigen::Index i = 0; i < n; ++i)
            z(i) = normal(rng);
        const Eigen::VectorXd x = chol * z;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double vol = blocks.volatilities.empty() ? 0.01 : blocks.volatilities[static_cast<std::size_t>(i)];
            values(t, i) = blocks.drift + vol * x(i);
        }
    }

    std::vector<std::string> tickers;
    for (std::size_t i = 0; i < n_assets; ++i)
        tickers.push_back(fmt::format("S{:02d}", i));
    const Date start{chr::year{2008} / chr::September / chr::day{22}};
    return AlignedPanel(std::move(tickers), business_days(start, n_days), std::move(values));
}

std::string panel_to_csv(const AlignedPanel& panel)
{
    std::string out = "date";
    for (const auto& t : panel.tickers())
        out += "," + t;
    out += "\n";
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        out += format_date(panel.dates()[r]);
        for (std::size_t c = 0; c < panel.cols(); ++c)
            out += "," + csv::format_exact(panel.values()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        out += "\n";
    }
    return out;
}

void write_panel_csv(const std::filesystem::path& path, const AlignedPanel& panel)
{
    csv::write_atomic(path, panel_to_csv(panel));
}

AlignedPanel read_panel_csv(const std::filesystem::path& path)
{
    const auto lines = csv::read_lines(path);
    const std::string where = path.filename().string();
    if (lines.empty())
        throw ParseError(where + ": empty panel file", 1);
    auto header = csv::split_row(lines[0]);
    if (header.size() < 2 || csv::trim(header[0]) != "date")
        throw ParseError(where + ": panel header must start with 'date' and name at least one column", 1);
    std::vector<std::string> tickers;
    for (std::size_t i = 1; i < header.size(); ++i)
        tickers.emplace_back(csv::trim(header[i]));

    std::vector<Date> dates;
    std::vector<std::vector<double>> rows;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (csv::trim(lines[ln]).empty())
            continue;
        const auto cells = csv::split_row(lines[ln]);
        if (cells.size() != header.size())
            throw ParseError(fmt::format("{}:{}: expected {} fields, got {}", where, ln + 1, header.size(), cells.size()),
                             ln + 1);
        try {
            dates.push_back(parse_date(cells[0]));
        } catch (const std::invalid_argument& e) {
            throw ParseError(fmt::format("{}:{}: {}", where, ln + 1, e.what()), ln + 1);
        }
        std::vector<double> row(tickers.size());
        for (std::size_t c = 0; c < tickers.size(); ++c)
            if (!csv::parse_double(cells[c + 1], row[c]))
                throw ParseError(fmt::format("{}:{}: cannot parse value '{}'", where, ln + 1, cells[c + 1]), ln + 1);
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(tickers.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < tickers.size(); ++c)
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return AlignedPanel(std::move(tickers), std::move(dates), std::move(values));
}

} // namespace idxf
