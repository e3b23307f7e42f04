#include "idxf/pipeline/commands.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "idxf/csv.hpp"
#include "idxf/errors.hpp"
#include "idxf/evaluation.hpp"
#include "idxf/index_builder.hpp"
#include "idxf/selection.hpp"

namespace idxf::pipeline {

namespace fs = std::filesystem;

namespace {

const fs::path& price_path(const PipelineConfig& cfg, const std::string& ticker)
{
    for (const auto& [t, p] : cfg.data.prices)
        if (t == ticker)
            return p;
    throw ValidationError("no price file configured for '" + ticker + "'");
}

ReturnSeries load_returns(const PipelineConfig& cfg, const std::string& ticker, const fs::path& path)
{
    const auto prices = load_price_csv(path, ticker, cfg.data.schema);
    return compute_returns(prices, cfg.data.return_mode, cfg.data.price_field);
}

AlignedPanel returns_panel(const PipelineConfig& cfg, const std::vector<std::string>& tickers, AlignPolicy policy)
{
    std::vector<TimeSeries> series;
    for (const auto& t : tickers)
        series.push_back(load_returns(cfg, t, price_path(cfg, t)));
    spdlog::debug("loaded {} return series", series.size());
    return align_calendars(series, policy);
}

std::vector<std::string> priced_tickers(const PipelineConfig& cfg)
{
    std::vector<std::string> out;
    for (const auto& [t, _] : cfg.data.prices)
        out.push_back(t);
    return out;
}

std::vector<std::string> read_selection(const fs::path& path)
{
    const auto lines = csv::read_lines(path);
    if (lines.empty() || csv::trim(lines[0]) != "ticker,score")
        throw ParseError(path.filename().string() + ": expected header 'ticker,score'", 1);
    std::vector<std::string> out;
    for (std::size_t i = 1; i < lines.size(); ++i)
        if (!csv::trim(lines[i]).empty())
            out.emplace_back(csv::trim(csv::split_row(lines[i]).at(0)));
    if (out.empty())
        throw ParseError(path.filename().string() + ": no tickers selected");
    return out;
}

void emit(CommandResult& r, const fs::path& path, const std::string& contents)
{
    csv::write_atomic(path, contents);
    r.outputs.push_back(path);
    spdlog::info("wrote {}", path.string());
}

std::string vector_to_csv(const std::string& header, const std::vector<std::string>& keys, const Eigen::VectorXd& v)
{
    std::string out = header + "\n";
    for (std::size_t i = 0; i < keys.size(); ++i)
        out += keys[i] + "," + csv::format_exact(v(static_cast<Eigen::Index>(i))) + "\n";
    return out;
}

Weights allocate_with(Strategy s, const CovarianceMatrix& c, const Linkage& l, std::vector<std::string>* warnings)
{
    switch (s) {
    case Strategy::hrp_paper: {
        auto r = hrp_paper(c, l);
        if (warnings)
            *warnings = r.warnings;
        return r.weights;
    }
    case Strategy::hrp_bisection: return hrp_recursive_bisection(c, l.leaf_order());
    case Strategy::equal_weight: return equal_weight(c.tickers());
    case Strategy::min_variance: return min_variance_long_only(c).weights;
    }
    throw std::logic_error("unhandled strategy");
}

TimeSeries load_factor(const PipelineConfig& cfg, const std::string& name, const fs::path& path)
{
    return price_column(load_price_csv(path, name, cfg.data.schema), cfg.data.price_field);
}

} // namespace

std::string scaler_to_csv(const std::vector<std::string>& features, const Scaler& s)
{
    std::string out = "feature,min,max\n";
    for (std::size_t i = 0; i < features.size(); ++i)
        out += fmt::format("{},{},{}\n", features[i], csv::format_exact(s.mins()(static_cast<Eigen::Index>(i))),
                           csv::format_exact(s.maxs()(static_cast<Eigen::Index>(i))));
    return out;
}

CommandResult run_select(const PipelineConfig& cfg)
{
    auto metrics = load_metrics_csv(*cfg.data.metrics);
    if (metrics.size() < 2)
        throw ValidationError("select: the metrics file needs at least 2 companies");
    if (cfg.selection.top_k > metrics.size())
        throw ValidationError(fmt::format("select: top_k = {} exceeds the {} companies in the metrics file",
                                          cfg.selection.top_k, metrics.size()));
    std::vector<std::string> tickers;
    for (const auto& m : metrics) {
        price_path(cfg, m.ticker); // every scored company needs prices
        tickers.push_back(m.ticker);
    }

    std::vector<TimeSeries> series;
    for (const auto& t : tickers)
        series.push_back(load_returns(cfg, t, price_path(cfg, t)));
    const bool external_market = cfg.data.market.has_value();
    if (external_market)
        series.push_back(load_returns(cfg, "MARKET", *cfg.data.market));
    const auto panel = align_calendars(series, AlignPolicy::intersect);
    const auto& v = panel.values();

    // Beta against the benchmark, or against the equal-weight industry average.
    const Eigen::VectorXd market = external_market ? Eigen::VectorXd(v.col(v.cols() - 1))
                                                   : Eigen::VectorXd(v.leftCols(static_cast<Eigen::Index>(tickers.size())).rowwise().mean());
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        const Eigen::VectorXd r = v.col(static_cast<Eigen::Index>(i));
        metrics[i].beta = beta(std::span(r.data(), static_cast<std::size_t>(r.size())),
                               std::span(market.data(), static_cast<std::size_t>(market.size())));
        metrics[i].volatility = volatility(std::span(r.data(), static_cast<std::size_t>(r.size())));
    }

    const SelectionWeights weights(cfg.selection.weights);
    const auto normalized = normalize_metrics(metrics);
    std::vector<ScoredTicker> scores;
    for (const auto& m : normalized)
        scores.emplace_back(m.ticker, selection_score(m, weights));
    const auto ranked = rank_universe(scores, cfg.selection.top_k);

    std::map<std::string, double> by_ticker(scores.begin(), scores.end());
    std::string sel = "ticker,score\n";
    for (const auto& t : ranked)
        sel += t + "," + csv::format_exact(by_ticker.at(t)) + "\n";

    std::string detail = "ticker,economic_impact,global_reach,capital_expenditure,beta,kpi,volatility,"
                         "norm_economic_impact,norm_global_reach,norm_capital_expenditure,norm_beta_distance,"
                         "norm_kpi,norm_volatility,score\n";
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        const auto& m = metrics[i];
        const auto& n = normalized[i];
        detail += m.ticker;
        for (double x : {m.economic_impact, m.global_reach, m.capital_expenditure, m.beta, m.kpi, m.volatility,
                         n.economic_impact, n.global_reach, n.capital_expenditure, n.beta, n.kpi, n.volatility,
                         scores[i].second})
            detail += "," + csv::format_exact(x);
        detail += "\n";
    }

    CommandResult r;
    emit(r, cfg.output("selection.csv"), sel);
    emit(r, cfg.output("selection_metrics.csv"), detail);
    r.stdout_text = sel;
    return r;
}

CommandResult run_allocate(const PipelineConfig& cfg)
{
    std::vector<std::string> tickers;
    if (cfg.allocation.universe == "all")
        tickers = priced_tickers(cfg);
    else if (cfg.allocation.universe == "selected")
        tickers = read_selection(cfg.output("selection.csv"));
    else
        tickers = cfg.allocation.constituents;

    const auto panel = returns_panel(cfg, tickers, cfg.risk.align);
    spdlog::info("allocate: {} assets over {} aligned days", panel.cols(), panel.rows());
    const auto cov = covariance_matrix(panel);
    const auto rho = correlation_matrix(cov);
    const auto dist = correlation_distance(rho, cfg.risk.distance);
    const auto tree = tickers.size() > 1 ? linkage(dist, cfg.risk.linkage) : Linkage(1, {});

    std::vector<std::string> warnings;
    const auto w = allocate_with(cfg.allocation.strategy, cov, tree, &warnings);
    for (const auto& msg : warnings)
        spdlog::warn("hrp_paper: {}", msg);

    CommandResult r;
    emit(r, cfg.output("weights.csv"), weights_to_csv(w, 4));
    emit(r, cfg.output("weights_exact.csv"), weights_to_csv(w, -1));
    emit(r, cfg.output("linkage.csv"), linkage_to_csv(tree));
    emit(r, cfg.output("covariance.csv"), matrix_to_csv(cov.tickers(), cov.matrix()));
    emit(r, cfg.output("correlation.csv"), matrix_to_csv(rho.tickers(), rho.matrix()));
    emit(r, cfg.output("distance.csv"), matrix_to_csv(dist.tickers(), dist.matrix()));

    // Daily moments of every strategy on the same estimates, for comparison.
    const Eigen::VectorXd mu = panel.values().colwise().mean().transpose();
    std::string cmp = "strategy,expected_return,variance\n";
    for (auto s : {Strategy::hrp_paper, Strategy::hrp_bisection, Strategy::equal_weight, Strategy::min_variance}) {
        const auto m = portfolio_moments(allocate_with(s, cov, tree, nullptr), mu, cov);
        cmp += fmt::format("{},{},{}\n", to_string(s), csv::format_exact(m.expected_return),
                           csv::format_exact(m.variance));
    }
    emit(r, cfg.output("strategy_moments.csv"), cmp);

    if (cfg.risk.clusters > 0) {
        const int m = std::min(cfg.risk.clusters, static_cast<int>(tickers.size()));
        const auto agg = cluster_aggregates(cov, rho, tree, m);
        std::vector<std::string> ids;
        for (int k = 0; k < m; ++k)
            ids.push_back("C" + std::to_string(k));
        std::string assign = "ticker,cluster\n";
        for (std::size_t i = 0; i < tickers.size(); ++i)
            assign += fmt::format("{},C{}\n", cov.tickers()[i], agg.assignment[i]);
        emit(r, cfg.output("cluster_assignment.csv"), assign);
        emit(r, cfg.output("cluster_covariance.csv"), matrix_to_csv(ids, agg.covariance));
        emit(r, cfg.output("cluster_correlation.csv"), matrix_to_csv(ids, agg.correlation));
        emit(r, cfg.output("cluster_avg_corr.csv"), vector_to_csv("cluster,avg_corr", ids, agg.avg_corr_cluster));
        emit(r, cfg.output("cluster_cross_corr.csv"), matrix_to_csv(ids, agg.avg_corr_cross));
    }
    r.stdout_text = weights_to_csv(w, 4);
    return r;
}

CommandResult run_build_index(const PipelineConfig& cfg)
{
    const Weights w = cfg.index.weights == "published"   ? heavy_machinery_weights()
                      : cfg.index.weights == "allocated" ? read_weights_csv(cfg.output("weights_exact.csv"))
                                                         : read_weights_csv(*cfg.index.weights_path);
    for (const auto& t : w.tickers())
        price_path(cfg, t);
    const auto panel = returns_panel(cfg, w.tickers(), AlignPolicy::intersect);
    const auto index = build_index(w, panel);
    spdlog::info("build-index: {} days, {} constituents", index.dates.size(), w.size());

    CommandResult r;
    emit(r, cfg.output("index.csv"), index_to_csv(index));
    emit(r, cfg.output("index_weights.csv"), weights_to_csv(w, -1));
    r.stdout_text = fmt::format("index: {} days from {} to {}\n", index.dates.size(), format_date(index.dates.front()),
                                format_date(index.dates.back()));
    return r;
}

ExperimentData build_experiment_data(const PipelineConfig& cfg)
{
    const auto index = read_index_csv(cfg.index_path());
    std::vector<TimeSeries> factors;
    for (const auto& [name, path] : cfg.data.factors)
        factors.push_back(load_factor(cfg, name, path));
    auto features = assemble_feature_matrix(index, factors, cfg.dataset.factor_mode);
    const auto lookback = cfg.dataset.lookback;
    if (features.rows() <= lookback + 1)
        throw ValidationError(fmt::format("dataset: {} aligned rows are too few for lookback {}", features.rows(),
                                          lookback));
    auto d1 = chronological_split(make_windows(index_only(features), lookback), cfg.dataset.train_fraction);
    auto d2 = chronological_split(make_windows(features, lookback), cfg.dataset.train_fraction);
    spdlog::info("datasets: {} rows, {} features, {} train / {} test samples", features.rows(), features.cols(),
                 d2.train.samples(), d2.test.samples());
    return ExperimentData{std::move(features), std::move(d1), std::move(d2)};
}

CommandResult run_make_dataset(const PipelineConfig& cfg)
{
    const auto data = build_experiment_data(cfg);
    CommandResult r;
    emit(r, cfg.output("features.csv"), panel_to_csv(data.features));
    for (const auto& [name, split] : {std::pair{"dataset1", &data.dataset1}, std::pair{"dataset2", &data.dataset2}}) {
        emit(r, cfg.output(fmt::format("{}_train.csv", name)), dataset_to_csv(split->train));
        emit(r, cfg.output(fmt::format("{}_test.csv", name)), dataset_to_csv(split->test));
        emit(r, cfg.output(fmt::format("{}_scaler.csv", name)),
             scaler_to_csv(split->train.feature_names, split->train.scaler));
    }
    r.stdout_text = fmt::format("dataset1: {} features, dataset2: {} features, {} train / {} test samples\n",
                                data.dataset1.train.features(), data.dataset2.train.features(),
                                data.dataset2.train.samples(), data.dataset2.test.samples());
    return r;
}

CommandResult run_experiment(const PipelineConfig& cfg)
{
    const auto data = build_experiment_data(cfg);
    const auto& t = cfg.training;

    std::vector<RunStats> cells;
    for (const auto& [dataset, split] : {std::pair{"dataset1", &data.dataset1}, std::pair{"dataset2", &data.dataset2}})
        for (auto arch : {Architecture::lstm, Architecture::cnn_lstm}) {
            spdlog::info("run-experiment: {} on {} ({} runs x {} epochs)", to_string(arch), dataset, t.runs, t.epochs);
            cells.push_back(multi_run(arch, *split, t, dataset));
            const auto& c = cells.back();
            spdlog::info("  mean test RMSE {:.6f} (std {:.6f}, {} diverged)", c.mean, c.stddev, c.diverged);
            if (c.flagged)
                spdlog::warn("{}.{}: {} of {} runs diverged", c.model, c.dataset, c.diverged, c.runs.size());
        }

    ConfigFingerprint f;
    f.base_seed = t.seed;
    for (int r = 0; r < t.runs; ++r)
        f.seeds.push_back(t.seed + static_cast<std::uint64_t>(r));
    f.epochs = t.epochs;
    f.runs = t.runs;
    f.learning_rate = t.learning_rate;
    f.batch_size = t.batch_size;
    f.hidden = t.hidden;
    f.kernels = t.kernels;
    f.lookback = static_cast<int>(cfg.dataset.lookback);
    f.train_fraction = cfg.dataset.train_fraction;
    const auto report = comparison_report(cells, f);

    CommandResult r;
    emit(r, cfg.output("report.txt"), render_report(report));
    emit(r, cfg.output("runs.csv"), runs_to_csv(cells, f));
    const auto table = render_report_table(report);
    emit(r, cfg.output("report_table.txt"), table);
    r.stdout_text = table;
    return r;
}

CommandResult run_report(const PipelineConfig& cfg)
{
    const auto report = parse_report(csv::read_file(cfg.output("report.txt")));
    for (const auto& red : report.reductions) {
        auto mean_of = [&](const std::string& key) {
            const auto dot = key.find('.');
            return report.cell(key.substr(0, dot), key.substr(dot + 1)).mean;
        };
        if (red.percent != reduction_pct(mean_of(red.baseline), mean_of(red.improved)))
            throw ValidationError(fmt::format("report: reduction {} -> {} does not match the cell means",
                                              red.baseline, red.improved));
    }
    CommandResult r;
    const auto table = render_report_table(report);
    emit(r, cfg.output("report_table.txt"), table);
    r.stdout_text = table;
    return r;
}

CommandResult run_command(const PipelineConfig& cfg, Command command)
{
    validate_inputs(cfg, command);
    switch (command) {
    case Command::select: return run_select(cfg);
    case Command::allocate: return run_allocate(cfg);
    case Command::build_index: return run_build_index(cfg);
    case Command::make_dataset: return run_make_dataset(cfg);
    case Command::run_experiment: return run_experiment(cfg);
    case Command::report: return run_report(cfg);
    }
    throw std::logic_error("unhandled command");
}

} // namespace idxf::pipeline
