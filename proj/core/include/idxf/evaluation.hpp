#pragma once

/**
 * @file evaluation.hpp
 * @brief RMSE, multi-run aggregation and the model x dataset comparison report.
 *
 * A report covers four cells (lstm, cnn_lstm) x (dataset1, dataset2) and the
 * percent reduction (1 - improved/baseline) * 100 for every ordered pair of
 * cells in canonical order lstm/dataset1, cnn_lstm/dataset1, lstm/dataset2,
 * cnn_lstm/dataset2 (earlier cell is the baseline).
 */

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "idxf/dataset.hpp"
#include "idxf/forecast.hpp"

namespace idxf {

double rmse(std::span<const double> pred, std::span<const double> target);
double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);

/// (1 - improved / baseline) * 100. Throws for baseline <= 0.
double reduction_pct(double baseline, double improved);

struct RunOutcome {
    std::uint64_t seed = 0;
    bool diverged = false;
    double rmse_scaled = 0.0;   ///< test RMSE in [0,1]-scaled units
    double rmse_unscaled = 0.0; ///< same, after inverting the target scaling
    std::string message;        ///< divergence detail
};

struct RunStats {
    std::string model;   ///< "lstm" or "cnn_lstm"
    std::string dataset; ///< "dataset1" or "dataset2"
    std::vector<RunOutcome> runs;
    double mean = 0.0;          ///< over non-diverged runs, scaled units
    double stddev = 0.0;        ///< sample std-dev (0 for a single run)
    double mean_unscaled = 0.0;
    int diverged = 0;
    bool flagged = false;       ///< more than 10% of runs diverged

    std::size_t run_count() const noexcept { return runs.size(); }
    std::vector<double> rmses() const; ///< scaled RMSE of the non-diverged runs
};

/// Recomputes mean/stddev/diverged/flagged from `runs`.
void summarize(RunStats& stats);

/// Run r trains a fresh model with seed cfg.seed + r on `split.train` and scores
/// the test split. Runs execute on up to cfg.max_parallelism threads; results do
/// not depend on the thread count.
RunStats multi_run(Architecture arch, const DatasetSplit& split, const TrainConfig& cfg, std::string dataset_id);

/// Same, with explicit per-run seeds (useful to force collisions in tests).
RunStats multi_run_seeds(Architecture arch, const DatasetSplit& split, const TrainConfig& cfg,
                         std::span<const std::uint64_t> seeds, std::string dataset_id);

struct ConfigFingerprint {
    std::uint64_t base_seed = 0;
    std::vector<std::uint64_t> seeds;
    int epochs = 0;
    int runs = 0;
    double learning_rate = 0.0;
    int batch_size = 0;
    int hidden = 0;
    int kernels = 0;
    int lookback = 0;
    double train_fraction = 0.0;

    bool operator==(const ConfigFingerprint&) const = default;
};

struct Reduction {
    std::string baseline; ///< cell key, e.g. "lstm.dataset1"
    std::string improved;
    double percent = 0.0;

    bool operator==(const Reduction&) const = default;
};

struct CellSummary {
    std::string model;
    std::string dataset;
    double mean = 0.0;
    double stddev = 0.0;
    double mean_unscaled = 0.0;
    int runs = 0;
    int diverged = 0;
    bool flagged = false;
    std::vector<double> rmses;

    std::string key() const { return model + "." + dataset; }
    bool operator==(const CellSummary&) const = default;
};

struct ComparisonReport {
    std::array<CellSummary, 4> cells; ///< canonical order
    std::vector<Reduction> reductions; ///< six entries
    ConfigFingerprint fingerprint;

    const CellSummary& cell(std::string_view model, std::string_view dataset) const;
    bool operator==(const ComparisonReport&) const = default;
};

CellSummary summarize_cell(const RunStats& stats);

/// Cells may arrive in any order; all four (model, dataset) pairs are required.
ComparisonReport comparison_report(std::span<const CellSummary> cells, ConfigFingerprint fingerprint);
ComparisonReport comparison_report(std::span<const RunStats> cells, ConfigFingerprint fingerprint);

/// Machine-readable key = value document; numbers round-trip exactly.
std::string render_report(const ComparisonReport& r);
ComparisonReport parse_report(std::string_view text);

/// Human-readable table; every number is the machine value rounded for display.
std::string render_report_table(const ComparisonReport& r);

/// seed,model,dataset,run,rmse_scaled,rmse_unscaled,diverged with a fingerprint comment header.
std::string runs_to_csv(std::span<const RunStats> cells, const ConfigFingerprint& fingerprint);

} // namespace idxf
