#include "idxf/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "idxf/csv.hpp"
#include "idxf/errors.hpp"

namespace idxf {

double rmse(std::span<const double> pred, std::span<const double> target)
{
    if (pred.size() != target.size())
        throw std::invalid_argument(fmt::format("rmse: length mismatch ({} vs {})", pred.size(), target.size()));
    if (pred.empty())
        throw std::invalid_argument("rmse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(pred.size()));
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target)
{
    return rmse(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
                std::span<const double>(target.data(), static_cast<std::size_t>(target.size())));
}

double reduction_pct(double baseline, double improved)
{
    if (!(baseline > 0.0))
        throw std::invalid_argument(fmt::format("reduction_pct: baseline {} must be positive", baseline));
    return (1.0 - improved / baseline) * 100.0;
}

std::vector<double> RunStats::rmses() const
{
    std::vector<double> out;
    for (const auto& r : runs)
        if (!r.diverged)
            out.push_back(r.rmse_scaled);
    return out;
}

void summarize(RunStats& s)
{
    const auto ok = s.rmses();
    s.diverged = static_cast<int>(s.runs.size() - ok.size());
    s.flagged = static_cast<double>(s.diverged) > 0.1 * static_cast<double>(s.runs.size());
    s.mean = s.stddev = s.mean_unscaled = 0.0;
    if (ok.empty()) {
        s.mean = s.mean_unscaled = std::nan("");
        return;
    }
    s.mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
    double unscaled = 0.0;
    for (const auto& r : s.runs)
        if (!r.diverged)
            unscaled += r.rmse_unscaled;
    s.mean_unscaled = unscaled / static_cast<double>(ok.size());
    if (ok.size() > 1) {
        double ss = 0.0;
        for (const double v : ok)
            ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(ok.size() - 1));
    }
}

RunStats multi_run(Architecture arch, const DatasetSplit& split, const TrainConfig& cfg, std::string dataset_id)
{
    cfg.validate();
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.runs));
    for (std::size_t r = 0; r < seeds.size(); ++r)
        seeds[r] = cfg.seed + r;
    return multi_run_seeds(arch, split, cfg, seeds, std::move(dataset_id));
}

RunStats multi_run_seeds(Architecture arch, const DatasetSplit& split, const TrainConfig& cfg,
                         std::span<const std::uint64_t> seeds, std::string dataset_id)
{
    cfg.validate();
    if (seeds.empty())
        throw std::invalid_argument("multi_run: at least one run required");
    if (!split.test.scaler.fitted())
        throw std::invalid_argument("multi_run: test split must carry a fitted scaler");

    RunStats stats;
    stats.model = std::string(to_string(arch));
    stats.dataset = std::move(dataset_id);
    stats.runs.resize(seeds.size());

    const auto& test = split.test;
    Eigen::VectorXd target_unscaled(test.y.size());
    for (Eigen::Index i = 0; i < test.y.size(); ++i)
        target_unscaled(i) = test.scaler.inverse(test.y(i), test.target_feature);

    auto run_one = [&](std::size_t r) {
        RunOutcome& out = stats.runs[r];
        out.seed = seeds[r];
        TrainConfig run_cfg = cfg;
        run_cfg.seed = seeds[r];
        try {
            const auto trained = train(arch, split.train, run_cfg);
            const Eigen::VectorXd pred = predict(trained.model, test);
            if (!pred.allFinite())
                throw DivergenceError("non-finite test predictions", run_cfg.epochs);
            out.rmse_scaled = rmse(pred, test.y);
            Eigen::VectorXd pred_unscaled(pred.size());
            for (Eigen::Index i = 0; i < pred.size(); ++i)
                pred_unscaled(i) = test.scaler.inverse(pred(i), test.target_feature);
            out.rmse_unscaled = rmse(pred_unscaled, target_unscaled);
        } catch (const DivergenceError& e) {
            out.diverged = true;
            out.message = e.what();
        }
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_parallelism), seeds.size());
    if (workers <= 1) {
        for (std::size_t r = 0; r < seeds.size(); ++r)
            run_one(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < seeds.size(); r = next++)
                    run_one(r);
            });
    }
    summarize(stats);
    return stats;
}

namespace {

constexpr std::array<std::pair<const char*, const char*>, 4> kCanonicalCells{{
    {"lstm", "dataset1"},
    {"cnn_lstm", "dataset1"},
    {"lstm", "dataset2"},
    {"cnn_lstm", "dataset2"},
}};

std::string join_numbers(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + csv::format_exact(v[i]);
    return out;
}

} // namespace

const CellSummary& ComparisonReport::cell(std::string_view model, std::string_view dataset) const
{
    for (const auto& c : cells)
        if (c.model == model && c.dataset == dataset)
            return c;
    throw std::out_of_range(fmt::format("report has no cell {}.{}", model, dataset));
}

CellSummary summarize_cell(const RunStats& s)
{
    return CellSummary{s.model, s.dataset, s.mean, s.stddev, s.mean_unscaled, static_cast<int>(s.run_count()),
                       s.diverged, s.flagged, s.rmses()};
}

ComparisonReport comparison_report(std::span<const CellSummary> cells, ConfigFingerprint fingerprint)
{
    ComparisonReport r;
    for (std::size_t k = 0; k < kCanonicalCells.size(); ++k) {
        const auto [model, dataset] = kCanonicalCells[k];
        const auto it = std::find_if(cells.begin(), cells.end(),
                                     [&](const CellSummary& c) { return c.model == model && c.dataset == dataset; });
        if (it == cells.end())
            throw std::invalid_argument(fmt::format("comparison_report: missing cell {}.{}", model, dataset));
        r.cells[k] = *it;
    }
    for (std::size_t a = 0; a < r.cells.size(); ++a)
        for (std::size_t b = a + 1; b < r.cells.size(); ++b)
            r.reductions.push_back(Reduction{r.cells[a].key(), r.cells[b].key(),
                                             reduction_pct(r.cells[a].mean, r.cells[b].mean)});
    r.fingerprint = std::move(fingerprint);
    return r;
}

ComparisonReport comparison_report(std::span<const RunStats> cells, ConfigFingerprint fingerprint)
{
    std::vector<CellSummary> summaries;
    for (const auto& c : cells)
        summaries.push_back(summarize_cell(c));
    return comparison_report(summaries, std::move(fingerprint));
}

std::string render_report(const ComparisonReport& r)
{
    const auto& f = r.fingerprint;
    std::string out = "# idxf comparison report\nformat_version = 1\n";
    auto kv = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
    kv("fingerprint.base_seed", std::to_string(f.base_seed));
    std::string seeds;
    for (std::size_t i = 0; i < f.seeds.size(); ++i)
        seeds += (i ? "," : "") + std::to_string(f.seeds[i]);
    kv("fingerprint.seeds", seeds);
    kv("fingerprint.epochs", std::to_string(f.epochs));
    kv("fingerprint.runs", std::to_string(f.runs));
    kv("fingerprint.learning_rate", csv::format_exact(f.learning_rate));
    kv("fingerprint.batch_size", std::to_string(f.batch_size));
    kv("fingerprint.hidden", std::to_string(f.hidden));
    kv("fingerprint.kernels", std::to_string(f.kernels));
    kv("fingerprint.lookback", std::to_string(f.lookback));
    kv("fingerprint.train_fraction", csv::format_exact(f.train_fraction));
    for (const auto& c : r.cells) {
        const auto p = "cell." + c.key() + ".";
        kv(p + "mean_rmse", csv::format_exact(c.mean));
        kv(p + "std_rmse", csv::format_exact(c.stddev));
        kv(p + "mean_rmse_unscaled", csv::format_exact(c.mean_unscaled));
        kv(p + "runs", std::to_string(c.runs));
        kv(p + "diverged", std::to_string(c.diverged));
        kv(p + "flagged", c.flagged ? "true" : "false");
        kv(p + "rmse", join_numbers(c.rmses));
    }
    for (const auto& red : r.reductions)
        kv("reduction." + red.baseline + ".to." + red.improved, csv::format_exact(red.percent));
    return out;
}

ComparisonReport parse_report(std::string_view text)
{
    std::map<std::string, std::string> kv;
    std::vector<std::string> reduction_keys;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = csv::trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find(" = ");
        if (eq == std::string_view::npos)
            throw ParseError(fmt::format("report line {}: expected 'key = value'", line_no), line_no);
        std::string key(line.substr(0, eq));
        if (key.starts_with("reduction."))
            reduction_keys.push_back(key);
        kv[key] = std::string(line.substr(eq + 3));
    }
    auto get = [&](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end())
            throw ParseError("report: missing key '" + key + "'");
        return it->second;
    };
    auto num = [&](const std::string& key) {
        double v = 0.0;
        const auto& s = get(key);
        if (s == "nan")
            return std::nan("");
        if (!csv::parse_double(s, v))
            throw ParseError("report: bad number for '" + key + "'");
        return v;
    };
    auto integer = [&](const std::string& key) { return static_cast<int>(num(key)); };
    auto list = [&](const std::string& key) {
        std::vector<double> out;
        const auto& s = get(key);
        if (s.empty())
            return out;
        for (const auto& cell : csv::split_row(s)) {
            double v = 0.0;
            if (!csv::parse_double(cell, v))
                throw ParseError("report: bad list entry in '" + key + "'");
            out.push_back(v);
        }
        return out;
    };
    if (get("format_version") != "1")
        throw ParseError("report: unsupported format_version");

    ComparisonReport r;
    auto& f = r.fingerprint;
    f.base_seed = std::stoull(get("fingerprint.base_seed"));
    if (!get("fingerprint.seeds").empty())
        for (const auto& s : csv::split_row(get("fingerprint.seeds")))
            f.seeds.push_back(std::stoull(s));
    f.epochs = integer("fingerprint.epochs");
    f.runs = integer("fingerprint.runs");
    f.learning_rate = num("fingerprint.learning_rate");
    f.batch_size = integer("fingerprint.batch_size");
    f.hidden = integer("fingerprint.hidden");
    f.kernels = integer("fingerprint.kernels");
    f.lookback = integer("fingerprint.lookback");
    f.train_fraction = num("fingerprint.train_fraction");
    for (std::size_t k = 0; k < kCanonicalCells.size(); ++k) {
        auto& c = r.cells[k];
        c.model = kCanonicalCells[k].first;
        c.dataset = kCanonicalCells[k].second;
        const auto p = "cell." + c.key() + ".";
        c.mean = num(p + "mean_rmse");
        c.stddev = num(p + "std_rmse");
        c.mean_unscaled = num(p + "mean_rmse_unscaled");
        c.runs = integer(p + "runs");
        c.diverged = integer(p + "diverged");
        c.flagged = get(p + "flagged") == "true";
        c.rmses = list(p + "rmse");
    }
    for (const auto& key : reduction_keys) {
        const auto body = key.substr(std::string("reduction.").size());
        const auto sep = body.find(".to.");
        if (sep == std::string::npos)
            throw ParseError("report: malformed reduction key '" + key + "'");
        r.reductions.push_back(Reduction{body.substr(0, sep), body.substr(sep + 4), num(key)});
    }
    return r;
}

std::string render_report_table(const ComparisonReport& r)
{
    std::string out;
    out += "Mean test RMSE (scaled [0,1] units), runs per cell in parentheses\n\n";
    out += fmt::format("{:<10} {:>22} {:>22}\n", "model", "dataset1", "dataset2");
    for (const char* model : {"lstm", "cnn_lstm"}) {
        const auto& d1 = r.cell(model, "dataset1");
        const auto& d2 = r.cell(model, "dataset2");
        out += fmt::format("{:<10} {:>14.6f} ({:>4}) {:>14.6f} ({:>4})\n", model, d1.mean, d1.runs, d2.mean, d2.runs);
    }
    out += "\nStd-dev of test RMSE\n";
    for (const auto& c : r.cells)
        out += fmt::format("  {:<20} {:.6f}\n", c.key(), c.stddev);
    out += "\nMean test RMSE (unscaled return units)\n";
    for (const auto& c : r.cells)
        out += fmt::format("  {:<20} {:.6f}\n", c.key(), c.mean_unscaled);
    out += "\nRMSE reduction, (1 - improved/baseline) x 100\n";
    for (const auto& red : r.reductions)
        out += fmt::format("  {:<20} -> {:<20} {:>8.2f}%\n", red.baseline, red.improved, red.percent);
    bool any_flag = false;
    for (const auto& c : r.cells)
        if (c.diverged > 0) {
            out += fmt::format("\nnote: {} had {} diverged run(s){}", c.key(), c.diverged,
                               c.flagged ? " (more than 10% of runs, cell flagged)" : "");
            any_flag = true;
        }
    if (any_flag)
        out += "\n";
    out += fmt::format("\nseed base {} | epochs {} | runs {} | lr {} | batch {} | hidden {} | kernels {} | "
                       "lookback {} | train fraction {}\n",
                       r.fingerprint.base_seed, r.fingerprint.epochs, r.fingerprint.runs, r.fingerprint.learning_rate,
                       r.fingerprint.batch_size, r.fingerprint.hidden, r.fingerprint.kernels, r.fingerprint.lookback,
                       r.fingerprint.train_fraction);
    out += "Reductions are recomputed from the printed means; rounded published figures may differ slightly.\n";
    return out;
}

std::string runs_to_csv(std::span<const RunStats> cells, const ConfigFingerprint& f)
{
    std::string out = fmt::format("# base_seed={} epochs={} runs={} learning_rate={} batch_size={} hidden={} "
                                  "kernels={} lookback={} train_fraction={}\n",
                                  f.base_seed, f.epochs, f.runs, csv::format_exact(f.learning_rate), f.batch_size,
                                  f.hidden, f.kernels, f.lookback, csv::format_exact(f.train_fraction));
    out += "seed,model,dataset,run,rmse_scaled,rmse_unscaled,diverged\n";
    for (const auto& c : cells)
        for (std::size_t r = 0; r < c.runs.size(); ++r) {
            const auto& run = c.runs[r];
            out += fmt::format("{},{},{},{},{},{},{}\n", run.seed, c.model, c.dataset, r,
                               run.diverged ? "nan" : csv::format_exact(run.rmse_scaled),
                               run.diverged ? "nan" : csv::format_exact(run.rmse_unscaled), run.diverged ? 1 : 0);
        }
    return out;
}

} // namespace idxf
