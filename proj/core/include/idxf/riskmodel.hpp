#pragma once

/**
 * @file riskmodel.hpp
 * @brief Covariance, correlation and distance matrices plus agglomerative
 *        clustering for hierarchical allocation.
 *
 * Linkage node ids follow the usual dendrogram convention: leaves are
 * 0..n-1 and the k-th merge creates node n+k.
 */

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "idxf/market_data.hpp"

namespace idxf {

/// Symmetric, positive semidefinite (min eigenvalue >= -1e-10).
class CovarianceMatrix {
public:
    CovarianceMatrix(std::vector<std::string> tickers, Eigen::MatrixXd c);

    const std::vector<std::string>& tickers() const noexcept { return tickers_; }
    const Eigen::MatrixXd& matrix() const noexcept { return c_; }
    Eigen::Index size() const noexcept { return c_.rows(); }

private:
    std::vector<std::string> tickers_;
    Eigen::MatrixXd c_;
};

/// Unit diagonal, symmetric, entries in [-1, 1].
class CorrelationMatrix {
public:
    CorrelationMatrix(std::vector<std::string> tickers, Eigen::MatrixXd rho);

    const std::vector<std::string>& tickers() const noexcept { return tickers_; }
    const Eigen::MatrixXd& matrix() const noexcept { return rho_; }
    Eigen::Index size() const noexcept { return rho_.rows(); }

private:
    std::vector<std::string> tickers_;
    Eigen::MatrixXd rho_;
};

/// Symmetric, nonnegative, zero diagonal.
class DistanceMatrix {
public:
    DistanceMatrix(std::vector<std::string> tickers, Eigen::MatrixXd d);

    const std::vector<std::string>& tickers() const noexcept { return tickers_; }
    const Eigen::MatrixXd& matrix() const noexcept { return d_; }
    Eigen::Index size() const noexcept { return d_.rows(); }

private:
    std::vector<std::string> tickers_;
    Eigen::MatrixXd d_;
};

enum class DistanceConvention {
    correlation, ///< sqrt((1 - rho) / 2)
    euclidean,   ///< Euclidean distance between correlation columns
};

enum class LinkageMethod { single, complete, ward };

struct Merge {
    int left = 0;  ///< the smaller of the two node ids
    int right = 0;
    double distance = 0.0;
    int left_size = 0;
    int right_size = 0;
    int size = 0;  ///< left_size + right_size
};

class Linkage {
public:
    Linkage(int n_leaves, std::vector<Merge> merges);

    int leaves() const noexcept { return n_; }
    const std::vector<Merge>& merges() const noexcept { return merges_; }

    /// Leaf ids under `node`, in left-to-right dendrogram order.
    std::vector<int> members(int node) const;
    /// Quasi-diagonal leaf order: leaves of the root, left subtree first.
    std::vector<int> leaf_order() const;

private:
    int n_;
    std::vector<Merge> merges_;
};

struct ClusterRisk {
    std::vector<int> assignment;      ///< leaf -> cluster id (clusters numbered by smallest member)
    Eigen::MatrixXd covariance;       ///< plain double sum of C over member pairs
    Eigen::MatrixXd correlation;      ///< covariance[i,j] / sqrt(covariance[i,i] covariance[j,j])
    Eigen::VectorXd avg_corr_cluster; ///< mean off-diagonal rho within a cluster, 1 for singletons
    Eigen::MatrixXd avg_corr_cross;   ///< mean rho over cross pairs, zero diagonal
};

/// Sample covariance (n-1 denominator) of the panel columns.
CovarianceMatrix covariance_matrix(const AlignedPanel& returns);

/// Throws std::invalid_argument naming the ticker when a variance is zero.
CorrelationMatrix correlation_matrix(const CovarianceMatrix& c);

DistanceMatrix correlation_distance(const CorrelationMatrix& rho,
                                    DistanceConvention convention = DistanceConvention::correlation);

/// Agglomerative clustering. At every step merges the closest pair of active
/// clusters; among equal distances the lexicographically smallest
/// (left_id, right_id) pair wins. Ward uses the Lance-Williams update.
Linkage linkage(const DistanceMatrix& d, LinkageMethod method = LinkageMethod::single);

/// Cluster assignment obtained by undoing the last m-1 merges.
std::vector<int> cut_tree(const Linkage& l, int m);

ClusterRisk cluster_aggregates(const CovarianceMatrix& c, const CorrelationMatrix& rho, const Linkage& l, int m);

/// Square matrix with a header row and first column of tickers.
std::string matrix_to_csv(const std::vector<std::string>& tickers, const Eigen::MatrixXd& m);
/// Merge records: left,right,distance,size.
std::string linkage_to_csv(const Linkage& l);

} // namespace idxf
