#pragma once

/**
 * @file market_data.hpp
 * @brief Daily price ingestion, return computation and calendar alignment.
 *
 * Prices come from one CSV per ticker (Yahoo-Finance style header by
 * default). Returns follow the holding-period definition
 *
 *     R_t = (P_t - P_{t-1} + D_t) / P_{t-1}
 *
 * where D_t is the cash dividend paid on day t.
 */

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace idxf {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD). Throws std::invalid_argument.
Date parse_date(std::string_view text);
std::string format_date(Date d);

struct PriceBar {
    Date date;
    double close = 0.0;
    double adjusted_close = 0.0;
    double dividend = 0.0;
};

enum class PriceField { close, adjusted_close };

/// Per-ticker daily bars. Construction validates ordering and positivity.
class PriceSeries {
public:
    PriceSeries(std::string ticker, std::vector<PriceBar> bars);

    const std::string& ticker() const noexcept { return ticker_; }
    std::span<const PriceBar> bars() const noexcept { return bars_; }
    std::size_t size() const noexcept { return bars_.size(); }

private:
    std::string ticker_;
    std::vector<PriceBar> bars_;
};

/// A dated scalar series (prices of one field, or returns). Dates strictly increasing.
class TimeSeries {
public:
    TimeSeries(std::string ticker, std::vector<Date> dates, std::vector<double> values);

    const std::string& ticker() const noexcept { return ticker_; }
    std::span<const Date> dates() const noexcept { return dates_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    std::string ticker_;
    std::vector<Date> dates_;
    std::vector<double> values_;
};

using ReturnSeries = TimeSeries;

TimeSeries price_column(const PriceSeries& series, PriceField field);

/// Dense date-by-ticker matrix. Every cell is finite.
class AlignedPanel {
public:
    AlignedPanel(std::vector<std::string> tickers, std::vector<Date> dates, Eigen::MatrixXd values);

    const std::vector<std::string>& tickers() const noexcept { return tickers_; }
    const std::vector<Date>& dates() const noexcept { return dates_; }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    std::size_t rows() const noexcept { return dates_.size(); }
    std::size_t cols() const noexcept { return tickers_.size(); }

    /// Column index of `ticker`; throws std::out_of_range when absent.
    std::size_t column(std::string_view ticker) const;
    TimeSeries series(std::size_t col) const;

private:
    std::vector<std::string> tickers_;
    std::vector<Date> dates_;
    Eigen::MatrixXd values_;
};

/// Header names for the columns we read. Empty `adjusted_close` or `dividend`
/// means "not present".
struct CsvSchema {
    std::string date = "Date";
    std::string close = "Close";
    std::string adjusted_close = "Adj Close";
    std::string dividend = "Dividends";
};

/// Loads one ticker's bars. Rows may appear in any order; the result is sorted.
/// Missing "Adj Close" falls back to Close; missing dividend column means 0.
/// Throws ParseError (with line number) on malformed rows, duplicate dates or
/// non-positive prices.
PriceSeries load_price_csv(const std::filesystem::path& path, std::string ticker,
                           const CsvSchema& schema = {});

enum class ReturnMode { simple_with_dividends, simple_price_only };

/// Daily simple returns. `simple_with_dividends` applies the dividend-inclusive
/// formula to the raw Close column (adjusted close already embeds dividends);
/// `simple_price_only` uses `field`.
ReturnSeries compute_returns(const PriceSeries& series, ReturnMode mode,
                             PriceField field = PriceField::adjusted_close);

/// Plain ratio returns of an already-extracted series.
ReturnSeries compute_returns(const TimeSeries& prices);

enum class AlignPolicy { intersect, forward_fill };

/// intersect: dates present in every series.
/// forward_fill: union of dates starting at the latest first-observation, each
/// column carrying its last value forward.
AlignedPanel align_calendars(std::span<const TimeSeries> series, AlignPolicy policy);

struct BlockStructure {
    std::vector<std::size_t> cluster_sizes;
    double intra_correlation = 0.0;
    double inter_correlation = 0.0;
    /// Daily return std-dev per asset; empty means 0.01 for every asset.
    std::vector<double> volatilities;
    double drift = 0.0;
};

/// Gaussian returns with block correlation. Dates are consecutive weekdays from
/// 2008-09-22; tickers are S00, S01, ... Pure function of (arguments, seed).
/// Throws std::invalid_argument if the target correlation is not positive definite.
AlignedPanel generate_synthetic_panel(std::size_t n_assets, std::size_t n_days,
                                      const BlockStructure& blocks, std::uint64_t seed);

/// Consecutive weekdays starting at `start` (inclusive if it is a weekday).
std::vector<Date> business_days(Date start, std::size_t count);

/// CSV with a "date" column followed by one column per ticker.
std::string panel_to_csv(const AlignedPanel& panel);
void write_panel_csv(const std::filesystem::path& path, const AlignedPanel& panel);
AlignedPanel read_panel_csv(const std::filesystem::path& path);

} // namespace idxf
