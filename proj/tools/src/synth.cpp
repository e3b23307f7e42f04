#include "idxf/pipeline/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "idxf/csv.hpp"
#include "idxf/market_data.hpp"

namespace idxf::pipeline {

namespace fs = std::filesystem;

namespace {

std::string factor_name(std::size_t k)
{
    return k < 6 ? fmt::format("IDX{}", k + 1) : fmt::format("ETF{}", k - 5);
}

std::string company_name(std::size_t i) { return fmt::format("CO{:02}", i); }

} // namespace

std::vector<fs::path> write_synthetic_workspace(const fs::path& dir, const SynthOptions& o)
{
    if (o.companies < 2 || o.days < 60 || o.factors < 1)
        throw std::invalid_argument("synth: need at least 2 companies, 60 days and 1 factor");
    if (!(o.signal >= 0.0 && o.signal < 1.0))
        throw std::invalid_argument("synth: signal share must lie in [0, 1)");

    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto dates = business_days(Date{std::chrono::year{2008} / std::chrono::September / std::chrono::day{22}},
                                     o.days + 1);

    // Factor returns and the lagged mix that drives every constituent.
    std::vector<std::vector<double>> fret(o.factors, std::vector<double>(o.days + 1, 0.0));
    for (auto& f : fret)
        for (std::size_t t = 1; t <= o.days; ++t)
            f[t] = 0.01 * z(rng);
    std::vector<double> mix(o.days + 1, 0.0);
    for (std::size_t t = 2; t <= o.days; ++t) {
        for (std::size_t k = 0; k < o.factors; ++k)
            mix[t] += (k % 2 == 0 ? 1.0 : -0.7) * fret[k][t - 1];
        mix[t] /= std::sqrt(static_cast<double>(o.factors)) * 0.01; // unit variance
    }

    // Idiosyncratic part: three correlated blocks.
    BlockStructure blocks;
    const std::size_t a = o.companies / 3 + (o.companies % 3 > 0);
    const std::size_t b = (o.companies - a) / 2 + ((o.companies - a) % 2 > 0);
    for (std::size_t s : {a, b, o.companies - a - b})
        if (s > 0)
            blocks.cluster_sizes.push_back(s);
    blocks.intra_correlation = 0.6;
    blocks.inter_correlation = 0.15;
    std::vector<double> vol(o.companies), load(o.companies);
    for (std::size_t i = 0; i < o.companies; ++i) {
        vol[i] = 0.008 + 0.012 * u(rng);
        load[i] = 0.5 + u(rng);
        blocks.volatilities.push_back(vol[i] * std::sqrt(1.0 - o.signal));
    }
    const auto noise = generate_synthetic_panel(o.companies, o.days, blocks, o.seed + 1);

    std::vector<fs::path> written;
    auto put = [&](const fs::path& p, const std::string& text) {
        csv::write_atomic(p, text);
        written.push_back(p);
    };

    for (std::size_t i = 0; i < o.companies; ++i) {
        double close = 20.0 + 80.0 * u(rng);
        double adj = close;
        std::string text = "Date,Open,High,Low,Close,Adj Close,Volume,Dividends\n";
        for (std::size_t t = 0; t <= o.days; ++t) {
            double div = 0.0;
            if (t > 0) {
                const double r = vol[i] * std::sqrt(o.signal) * load[i] / 1.25 * mix[t] +
                                 noise.values()(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(i));
                if (i % 2 == 0 && t % 63 == 0)
                    div = 0.004 * close;
                close = close * (1.0 + r) - div;
                adj = adj * (1.0 + r);
            }
            const double spread = 0.004 * close;
            text += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{:.6f}\n", format_date(dates[t]),
                                close - 0.3 * spread, close + spread, close - spread, close, adj,
                                100000 + static_cast<long>(900000 * u(rng)), div);
        }
        put(dir / "data" / "prices" / (company_name(i) + ".csv"), text);
    }

    for (std::size_t k = 0; k < o.factors; ++k) {
        double level = 100.0 * (1.0 + static_cast<double>(k));
        std::string text = "Date,Open,High,Low,Close,Adj Close,Volume\n";
        for (std::size_t t = 0; t <= o.days; ++t) {
            level *= 1.0 + fret[k][t];
            text += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},0\n", format_date(dates[t]), level, level,
                                level, level, level);
        }
        put(dir / "data" / "factors" / (factor_name(k) + ".csv"), text);
    }

    std::string metrics = "ticker,market_cap,intl_sales,total_sales,capex,kpi\n";
    for (std::size_t i = 0; i < o.companies; ++i) {
        const double total = 1e9 * (1.0 + 20.0 * u(rng));
        metrics += fmt::format("{},{:.0f},{:.0f},{:.0f},{:.0f},{:.4f}\n", company_name(i), 2e9 * (1.0 + 50.0 * u(rng)),
                               total * u(rng), total, total * (0.02 + 0.08 * u(rng)), u(rng));
    }
    put(dir / "data" / "metrics.csv", metrics);

    std::string cfg = fmt::format("# Synthetic workspace (seed {}). Paths are relative to this file.\n"
                                  "seed: {}\n"
                                  "output_dir: out\n"
                                  "data:\n"
                                  "  metrics: data/metrics.csv\n"
                                  "  return_mode: simple_with_dividends\n"
                                  "  prices:\n",
                                  o.seed, o.seed);
    for (std::size_t i = 0; i < o.companies; ++i)
        cfg += fmt::format("    {0}: data/prices/{0}.csv\n", company_name(i));
    cfg += "  factors:\n";
    for (std::size_t k = 0; k < o.factors; ++k)
        cfg += fmt::format("    - {{name: {0}, path: data/factors/{0}.csv}}\n", factor_name(k));
    cfg += fmt::format("selection:\n"
                       "  top_k: {}\n"
                       "risk:\n"
                       "  linkage: single\n"
                       "  distance: correlation\n"
                       "  clusters: 3\n"
                       "allocation:\n"
                       "  strategy: hrp_paper\n"
                       "  universe: selected\n"
                       "index:\n"
                       "  weights: allocated\n"
                       "dataset:\n"
                       "  lookback: 20\n"
                       "  train_fraction: 0.8\n"
                       "  factor_mode: returns\n"
                       "training:\n"
                       "  epochs: 5\n"
                       "  runs: 2\n"
                       "  learning_rate: 0.001\n"
                       "  batch_size: 32\n"
                       "  hidden: 16\n"
                       "  kernels: 8\n"
                       "  max_parallelism: 1\n",
                       std::min<std::size_t>(8, o.companies));
    put(dir / "config.yaml", cfg);
    return written;
}

} // namespace idxf::pipeline
