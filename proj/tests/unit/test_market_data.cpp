#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "idxf/errors.hpp"
#include "idxf/market_data.hpp"
#include "oracles.hpp"

using namespace idxf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("idxf_md_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const
    {
        std::ofstream(path / name) << text;
        return path / name;
    }
};

Date d(const char* s) { return parse_date(s); }

TimeSeries ts(std::string name, std::vector<const char*> dates, std::vector<double> values)
{
    std::vector<Date> ds;
    for (auto* s : dates)
        ds.push_back(d(s));
    return TimeSeries(std::move(name), std::move(ds), std::move(values));
}

} // namespace

TEST_CASE("parse_date / format_date")
{
    CHECK(format_date(d("2020-02-29")) == "2020-02-29");
    CHECK_THROWS_AS(parse_date("2021-02-29"), std::invalid_argument);
    CHECK_THROWS_AS(parse_date("2021/01/01"), std::invalid_argument);
    CHECK_THROWS_AS(parse_date(""), std::invalid_argument);
}

TEST_CASE("load_price_csv: three rows in date order")
{
    TempDir tmp;
    const auto p = tmp.write("a.csv", "Date,Open,Close,Adj Close,Volume\n"
                                      "2020-01-03,1,99,99,5\n"
                                      "2020-01-01,1,100,100,5\n"
                                      "2020-01-02,1,101,101,5\n");
    const auto s = load_price_csv(p, "A");
    REQUIRE(s.size() == 3);
    CHECK(s.bars()[0].close == 100.0);
    CHECK(s.bars()[1].close == 101.0);
    CHECK(s.bars()[2].close == 99.0);
    for (const auto& b : s.bars())
        CHECK(b.dividend == 0.0);
}

TEST_CASE("load_price_csv: missing adjusted close falls back to close")
{
    TempDir tmp;
    const auto p = tmp.write("a.csv", "Date,Close\n2020-01-01,10\n2020-01-02,11\n");
    const auto s = load_price_csv(p, "A");
    CHECK(s.bars()[1].adjusted_close == 11.0);
}

TEST_CASE("load_price_csv: errors carry the line number")
{
    TempDir tmp;
    const auto bad = tmp.write("bad.csv", "Date,Close\n2020-01-01,10\n2020-01-02,abc\n");
    try {
        load_price_csv(bad, "A");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(load_price_csv(tmp.write("dup.csv", "Date,Close\n2020-01-01,10\n2020-01-01,11\n"), "A"),
                    ParseError);
    CHECK_THROWS_AS(load_price_csv(tmp.write("neg.csv", "Date,Close\n2020-01-01,10\n2020-01-02,0\n"), "A"),
                    ParseError);
    CHECK_THROWS_AS(load_price_csv(tmp.write("hdr.csv", "When,Close\n2020-01-01,10\n"), "A"), ParseError);
}

TEST_CASE("load_price_csv: custom schema and dividends")
{
    TempDir tmp;
    const auto p = tmp.write("a.csv", "day,px,div\n2020-01-01,100,0\n2020-01-02,110,2\n");
    CsvSchema schema{"day", "px", "", "div"};
    const auto s = load_price_csv(p, "A", schema);
    const auto r = compute_returns(s, ReturnMode::simple_with_dividends);
    REQUIRE(r.size() == 1);
    CHECK(r.values()[0] == doctest::Approx(0.12).epsilon(1e-15));
    CHECK(compute_returns(s, ReturnMode::simple_price_only).values()[0] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("compute_returns: constant prices give zero returns")
{
    std::vector<PriceBar> bars;
    for (int i = 0; i < 5; ++i)
        bars.push_back({d("2020-01-01") + std::chrono::days{i}, 50.0, 50.0, 0.0});
    const auto r = compute_returns(PriceSeries("X", bars), ReturnMode::simple_with_dividends);
    REQUIRE(r.size() == 4);
    for (double v : r.values())
        CHECK(v == 0.0);
}

TEST_CASE("compute_returns: random series matches a one-line oracle")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> px(10.0, 200.0), dv(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<PriceBar> bars;
        for (int i = 0; i < 10; ++i) {
            const double c = px(rng);
            bars.push_back({d("2021-03-01") + std::chrono::days{i}, c, c * 0.9, i % 3 == 0 ? dv(rng) : 0.0});
        }
        const PriceSeries s("X", bars);
        const auto with = compute_returns(s, ReturnMode::simple_with_dividends);
        const auto adj = compute_returns(s, ReturnMode::simple_price_only);
        const auto raw = compute_returns(s, ReturnMode::simple_price_only, PriceField::close);
        CHECK(with.size() == 9);
        for (std::size_t t = 0; t < 9; ++t) {
            const auto& a = bars[t];
            const auto& b = bars[t + 1];
            CHECK(std::abs(with.values()[t] - (b.close - a.close + b.dividend) / a.close) <= 1e-15);
            CHECK(std::abs(adj.values()[t] - (b.adjusted_close - a.adjusted_close) / a.adjusted_close) <= 1e-15);
            CHECK(std::abs(raw.values()[t] - (b.close - a.close) / a.close) <= 1e-15);
            CHECK(with.dates()[t] == b.date);
        }
    }
}

TEST_CASE("PriceSeries / TimeSeries validation")
{
    CHECK_THROWS_AS(PriceSeries("X", {{d("2020-01-01"), 1.0, 1.0, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(ts("X", {"2020-01-02", "2020-01-01"}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(ts("X", {"2020-01-01"}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("align_calendars: identical dates stack columns")
{
    const std::vector<TimeSeries> in{ts("A", {"2020-01-01", "2020-01-02"}, {1, 2}),
                                     ts("B", {"2020-01-01", "2020-01-02"}, {3, 4})};
    for (auto policy : {AlignPolicy::intersect, AlignPolicy::forward_fill}) {
        const auto p = align_calendars(in, policy);
        CHECK(p.rows() == 2);
        CHECK(p.values() == (Eigen::MatrixXd(2, 2) << 1, 3, 2, 4).finished());
        CHECK(p.tickers() == std::vector<std::string>{"A", "B"});
    }
}

TEST_CASE("align_calendars: intersect and forward fill")
{
    const std::vector<TimeSeries> in{ts("A", {"2020-01-01", "2020-01-02", "2020-01-03"}, {1, 2, 3}),
                                     ts("B", {"2020-01-02", "2020-01-03", "2020-01-04"}, {20, 30, 40})};
    const auto i = align_calendars(in, AlignPolicy::intersect);
    CHECK(i.dates() == std::vector<Date>{d("2020-01-02"), d("2020-01-03")});
    CHECK(i.values()(0, 0) == 2.0);
    CHECK(i.values()(1, 1) == 30.0);

    const auto f = align_calendars(in, AlignPolicy::forward_fill);
    CHECK(f.dates() == std::vector<Date>{d("2020-01-02"), d("2020-01-03"), d("2020-01-04")});
    CHECK(f.values()(2, 0) == 3.0);  // A carried forward
    CHECK(f.values()(2, 1) == 40.0); // B real

    const std::vector<TimeSeries> disjoint{ts("A", {"2020-01-01", "2020-01-02"}, {1, 2}),
                                           ts("B", {"2020-02-01", "2020-02-02"}, {1, 2})};
    CHECK_THROWS_AS(align_calendars(disjoint, AlignPolicy::intersect), std::invalid_argument);
}

TEST_CASE("align_calendars: intersect dates are a subset of every input (property)")
{
    std::mt19937_64 rng(11);
    std::bernoulli_distribution keep(0.7);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<TimeSeries> in;
        for (int k = 0; k < 3; ++k) {
            std::vector<Date> ds;
            std::vector<double> vs;
            for (int i = 0; i < 40; ++i)
                if (keep(rng) || i == 0 || i == 20) {
                    ds.push_back(d("2019-05-01") + std::chrono::days{i});
                    vs.push_back(i);
                }
            in.emplace_back("T" + std::to_string(k), ds, vs);
        }
        const auto p = align_calendars(in, AlignPolicy::intersect);
        for (std::size_t r = 0; r < p.rows(); ++r)
            for (std::size_t c = 0; c < in.size(); ++c) {
                const auto dates = in[c].dates();
                const auto it = std::find(dates.begin(), dates.end(), p.dates()[r]);
                REQUIRE(it != dates.end());
                CHECK(p.values()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) ==
                      in[c].values()[static_cast<std::size_t>(it - dates.begin())]);
            }
        const auto f = align_calendars(in, AlignPolicy::forward_fill);
        CHECK(f.rows() >= p.rows());
    }
}

TEST_CASE("generate_synthetic_panel")
{
    SUBCASE("independent assets are uncorrelated in large samples")
    {
        BlockStructure b{{1, 1}, 0.0, 0.0, {}, 0.0};
        const auto p = generate_synthetic_panel(2, 50000, b, 1);
        std::vector<double> x(p.rows()), y(p.rows());
        for (std::size_t t = 0; t < p.rows(); ++t) {
            x[t] = p.values()(static_cast<Eigen::Index>(t), 0);
            y[t] = p.values()(static_cast<Eigen::Index>(t), 1);
        }
        const double rho = oracle::covariance(x, y) / std::sqrt(oracle::covariance(x, x) * oracle::covariance(y, y));
        CHECK(std::abs(rho) < 0.02);
    }
    SUBCASE("same seed gives bit-identical panels")
    {
        BlockStructure b{{2, 3}, 0.6, 0.2, {}, 0.0};
        const auto a = generate_synthetic_panel(5, 300, b, 9);
        const auto c = generate_synthetic_panel(5, 300, b, 9);
        CHECK(a.values() == c.values());
        CHECK(a.dates() == c.dates());
        CHECK(a.tickers()[4] == "S04");
        CHECK(generate_synthetic_panel(5, 300, b, 10).values() != a.values());
    }
    SUBCASE("single asset")
    {
        const auto p = generate_synthetic_panel(1, 10, BlockStructure{{1}, 0.0, 0.0, {}, 0.0}, 2);
        CHECK(p.cols() == 1);
    }
    SUBCASE("non-PD target rejected")
    {
        BlockStructure b{{1, 1, 1}, 0.0, -0.9, {}, 0.0};
        CHECK_THROWS_AS(generate_synthetic_panel(3, 10, b, 1), std::invalid_argument);
    }
    SUBCASE("weekday calendar")
    {
        const auto days = business_days(d("2008-09-22"), 10);
        for (auto day : days) {
            const std::chrono::weekday wd{day};
            CHECK(wd != std::chrono::Saturday);
            CHECK(wd != std::chrono::Sunday);
        }
        CHECK(days[5] == d("2008-09-29"));
    }
}

TEST_CASE("panel CSV round trip is exact")
{
    TempDir tmp;
    const auto p = generate_synthetic_panel(3, 20, BlockStructure{{3}, 0.3, 0.0, {}, 0.0}, 4);
    write_panel_csv(tmp.path / "p.csv", p);
    const auto back = read_panel_csv(tmp.path / "p.csv");
    CHECK(back.values() == p.values());
    CHECK(back.dates() == p.dates());
    CHECK(back.tickers() == p.tickers());
    CHECK(panel_to_csv(back) == panel_to_csv(p));
}
