#pragma once

/**
 * @file allocation.hpp
 * @brief Long-only index weighting strategies.
 *
 * Four strategies share the Weights result type:
 *  - hrp_paper: node-merge HRP. Every merge contributes the mean
 *    cross-covariance of its two children; a leaf takes its value from the
 *    first (lowest) merge that contains it, scaled by its child's size.
 *  - hrp_recursive_bisection: the classic top-down bisection over the
 *    quasi-diagonal leaf order.
 *  - equal_weight: 1/n each.
 *  - min_variance_long_only: simplex-constrained minimum of w'Cw.
 */

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "idxf/riskmodel.hpp"

namespace idxf {

/// Nonnegative fractions summing to 1 within 1e-12.
class Weights {
public:
    Weights(std::vector<std::string> tickers, Eigen::VectorXd w);

    const std::vector<std::string>& tickers() const noexcept { return tickers_; }
    const Eigen::VectorXd& values() const noexcept { return w_; }
    std::size_t size() const noexcept { return tickers_.size(); }
    double operator[](std::size_t i) const { return w_(static_cast<Eigen::Index>(i)); }

private:
    std::vector<std::string> tickers_;
    Eigen::VectorXd w_;
};

struct PortfolioMoments {
    double expected_return = 0.0;
    double variance = 0.0;
};

struct HrpPaperResult {
    Weights weights;
    /// Mean cross-covariance computed at each merge, in merge order (before
    /// the degenerate-value substitution).
    std::vector<double> node_values;
    std::vector<std::string> warnings;
};

/// Value substituted for a non-positive node value.
inline constexpr double kDegenerateNodeValue = 1e-12;

HrpPaperResult hrp_paper(const CovarianceMatrix& c, const Linkage& l);

/// `order` must be a permutation of 0..n-1 (normally Linkage::leaf_order()).
Weights hrp_recursive_bisection(const CovarianceMatrix& c, const std::vector<int>& order);

Weights equal_weight(std::size_t n);
Weights equal_weight(const std::vector<std::string>& tickers);

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate, double objective)
        : std::runtime_error(what), last_(std::move(last_iterate)), objective_(objective) {}

    const Eigen::VectorXd& last_iterate() const noexcept { return last_; }
    double objective() const noexcept { return objective_; }

private:
    Eigen::VectorXd last_;
    double objective_;
};

struct MinVarianceOptions {
    int max_iterations = 100000;
    double objective_tolerance = 1e-12; ///< relative to the current objective
    double step_tolerance = 1e-15;      ///< max-norm change of the iterate
};

struct MinVarianceResult {
    Weights weights;
    double variance = 0.0;
    int iterations = 0;
};

/// Projected gradient with fixed step 1/L, L the largest eigenvalue of 2C.
/// Throws ConvergenceError when the iteration budget runs out.
MinVarianceResult min_variance_long_only(const CovarianceMatrix& c, const MinVarianceOptions& opts = {});

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// mu_P = sum w_i mu_i ; sigma_P^2 = w' C w.
PortfolioMoments portfolio_moments(const Weights& w, const Eigen::VectorXd& mu, const CovarianceMatrix& c);

// Literal forms of the equal-weight return/variance formulas as published,
// which divide the weighted sums by n once more. Kept only for comparison;
// nothing in the pipeline reports them.
double literal_equal_weight_return(const Weights& w, const Eigen::VectorXd& mu);
double literal_equal_weight_variance(const Weights& w, const Eigen::VectorXd& mu);

enum class Strategy { hrp_paper, hrp_bisection, equal_weight, min_variance };

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s);
/// Comma-separated list of accepted strategy names.
std::string strategy_names();

/// Ticker,weight CSV. `decimals` < 0 writes the exact shortest representation.
std::string weights_to_csv(const Weights& w, int decimals = 4);
Weights read_weights_csv(const std::filesystem::path& path);

} // namespace idxf
