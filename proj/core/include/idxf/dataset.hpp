#pragma once

/**
 * @file dataset.hpp
 * @brief Supervised windowed datasets for next-day index return forecasting.
 *
 * Dataset 1 holds the index return column only; Dataset 2 appends one column
 * per factor (six market indexes and five factor ETFs in the reference
 * setup, giving 12 features). Scaling is min-max, fitted on the training
 * split only, and never clips.
 */

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "idxf/market_data.hpp"

namespace idxf {

/// Per-feature min-max scaler. Default-constructed scalers are unfitted and
/// refuse to transform.
class Scaler {
public:
    Scaler() = default;
    Scaler(Eigen::VectorXd mins, Eigen::VectorXd maxs);

    /// Fits on the rows of `rows` (observations x features).
    static Scaler fit(const Eigen::MatrixXd& rows);

    bool fitted() const noexcept { return mins_.size() > 0; }
    std::size_t features() const noexcept { return static_cast<std::size_t>(mins_.size()); }
    const Eigen::VectorXd& mins() const noexcept { return mins_; }
    const Eigen::VectorXd& maxs() const noexcept { return maxs_; }

    /// (x - min) / (max - min); constant features map to 0.5. Values outside
    /// the fitted range are not clipped.
    Eigen::MatrixXd transform(const Eigen::MatrixXd& rows) const;
    Eigen::MatrixXd inverse(const Eigen::MatrixXd& rows) const;
    double transform(double x, std::size_t feature) const;
    double inverse(double x, std::size_t feature) const;

private:
    void require_fitted(Eigen::Index cols) const;

    Eigen::VectorXd mins_;
    Eigen::VectorXd maxs_;
};

struct WindowedDataset {
    std::vector<std::string> feature_names;
    std::size_t target_feature = 0;
    std::size_t lookback = 0;
    std::vector<Eigen::MatrixXd> X; ///< per sample: lookback x features
    Eigen::VectorXd y;              ///< next-step target feature value
    Scaler scaler;                  ///< unfitted for raw (unscaled) datasets

    std::size_t samples() const noexcept { return X.size(); }
    std::size_t features() const noexcept { return feature_names.size(); }
};

/// X[s] = rows s..s+lookback-1, y[s] = target column at row s+lookback.
WindowedDataset make_windows(const AlignedPanel& series, std::size_t lookback, std::size_t target_feature = 0);

struct DatasetSplit {
    WindowedDataset train;
    WindowedDataset test;
};

/// First floor(fraction * N) samples train, the rest test, in order. The scaler
/// is fitted on the raw rows the training samples cover (windows and targets)
/// and applied to both halves.
DatasetSplit chronological_split(const WindowedDataset& ds, double train_fraction);

enum class FactorMode { returns, levels };

/// Date-aligned feature matrix: column 0 is the index return series, then one
/// column per factor. Factors are sampled as of each index date (last
/// observation on or before it). In `returns` mode factor levels are turned
/// into simple returns between consecutive index dates, which drops the first
/// index date.
AlignedPanel assemble_feature_matrix(const TimeSeries& index_returns, std::span<const TimeSeries> factor_levels,
                                     FactorMode mode = FactorMode::returns);

/// The same rows restricted to the index column.
AlignedPanel index_only(const AlignedPanel& features);

/// Flattened export: one row per (sample, lag) with all feature values and the
/// sample's target. Header: sample,lag,<features...>,target:<target feature>.
std::string dataset_to_csv(const WindowedDataset& ds);
void write_dataset_csv(const std::filesystem::path& path, const WindowedDataset& ds);
WindowedDataset read_dataset_csv(const std::filesystem::path& path);

} // namespace idxf
