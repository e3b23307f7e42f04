#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "idxf/index_builder.hpp"

using namespace idxf;

namespace {

AlignedPanel panel(std::vector<std::string> t, Eigen::MatrixXd v)
{
    auto dates = business_days(parse_date("2015-06-01"), static_cast<std::size_t>(v.rows()));
    return AlignedPanel(std::move(t), std::move(dates), std::move(v));
}

} // namespace

TEST_CASE("build_index: constant day returns that constant")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd w(4);
        for (auto& x : w)
            x = u(rng);
        w /= w.sum();
        const Weights ws({"A", "B", "C", "D"}, w);
        const auto idx = build_index(ws, panel({"A", "B", "C", "D"}, Eigen::MatrixXd::Constant(3, 4, 0.01)));
        for (double r : idx.returns)
            CHECK(std::abs(r - 0.01) <= 1e-15);
    }
}

TEST_CASE("build_index: published weights on a unit return vector")
{
    const auto w = heavy_machinery_weights();
    CHECK(w.tickers() == std::vector<std::string>{"CAT", "DE", "CNHI", "AGCO", "TEX", "ASTE", "MTW", "KMTUY"});
    const double printed[] = {0.0777, 0.0651, 0.1162, 0.012, 0.0978, 0.2071, 0.1036, 0.3206};
    for (std::size_t i = 0; i < 8; ++i)
        CHECK(std::round(w[i] * 1e4) / 1e4 == doctest::Approx(printed[i]).epsilon(1e-12));
    const auto idx = build_index(w, panel(w.tickers(), Eigen::MatrixXd::Ones(2, 8)));
    CHECK(std::abs(idx.returns[0] - 1.0) <= 1e-15);
}

TEST_CASE("build_index: matches a hand-rolled dot product, ignores extra columns")
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z(0.0, 0.02);
    Eigen::MatrixXd v(5, 4);
    for (auto i = 0; i < v.size(); ++i)
        v(i) = z(rng);
    const Weights w({"X", "Y", "Z"}, Eigen::Vector3d(0.2, 0.3, 0.5));
    const auto idx = build_index(w, panel({"Z", "EXTRA", "X", "Y"}, v));
    REQUIRE(idx.returns.size() == 5);
    for (Eigen::Index t = 0; t < 5; ++t)
        CHECK(std::abs(idx.returns[static_cast<std::size_t>(t)] - (0.2 * v(t, 2) + 0.3 * v(t, 3) + 0.5 * v(t, 0))) <=
              1e-15);
    CHECK(idx.dates.size() == 5);
    CHECK(idx.weights_used.values() == w.values());
}

TEST_CASE("build_index: linear in the panel, invariant to consistent permutation")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 0.02);
    Eigen::MatrixXd a(30, 3), b(30, 3);
    for (auto i = 0; i < a.size(); ++i) {
        a(i) = z(rng);
        b(i) = z(rng);
    }
    const Weights w({"A", "B", "C"}, Eigen::Vector3d(0.1, 0.6, 0.3));
    const auto ia = build_index(w, panel({"A", "B", "C"}, a));
    const auto ib = build_index(w, panel({"A", "B", "C"}, b));
    const auto iab = build_index(w, panel({"A", "B", "C"}, a + b));
    for (std::size_t t = 0; t < 30; ++t)
        CHECK(std::abs(iab.returns[t] - ia.returns[t] - ib.returns[t]) <= 1e-15);

    Eigen::MatrixXd p(30, 3);
    p << a.col(2), a.col(0), a.col(1);
    const Weights pw({"C", "A", "B"}, Eigen::Vector3d(0.3, 0.1, 0.6));
    const auto ip = build_index(pw, panel({"C", "A", "B"}, p));
    for (std::size_t t = 0; t < 30; ++t)
        CHECK(std::abs(ip.returns[t] - ia.returns[t]) <= 1e-15);
}

TEST_CASE("build_index: missing ticker is named")
{
    const Weights w({"A", "MISSING"}, Eigen::Vector2d(0.5, 0.5));
    try {
        build_index(w, panel({"A", "B"}, Eigen::MatrixXd::Zero(2, 2)));
        FAIL("expected error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("MISSING") != std::string::npos);
    }
}

TEST_CASE("index CSV round trip")
{
    Eigen::MatrixXd v(3, 1);
    v << 0.1, -1.0 / 3.0, 2e-17;
    const auto idx = build_index(equal_weight(std::vector<std::string>{"A"}), panel({"A"}, v));
    const auto path = std::filesystem::temp_directory_path() / "idxf_index_test.csv";
    write_index_csv(path, idx);
    const auto back = read_index_csv(path);
    CHECK(std::vector<double>(back.values().begin(), back.values().end()) == idx.returns);
    CHECK(std::vector<Date>(back.dates().begin(), back.dates().end()) == idx.dates);
    CHECK(index_to_csv(idx).substr(0, 12) == "date,return\n");
    std::filesystem::remove(path);
}
