#include "idxf/riskmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "idxf/csv.hpp"

namespace idxf {

namespace {

constexpr double kPsdTolerance = 1e-10;

void check_square(const Eigen::MatrixXd& m, std::size_t n_tickers, const char* what)
{
    if (m.rows() != m.cols())
        throw std::invalid_argument(fmt::format("{}: matrix is {}x{}, not square", what, m.rows(), m.cols()));
    if (static_cast<std::size_t>(m.rows()) != n_tickers)
        throw std::invalid_argument(fmt::format("{}: {} tickers for a {}x{} matrix", what, n_tickers, m.rows(), m.cols()));
    if (!m.allFinite())
        throw std::invalid_argument(fmt::format("{}: non-finite entries", what));
}

void check_symmetric(const Eigen::MatrixXd& m, double tol, const char* what)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol)
                throw std::invalid_argument(fmt::format("{}: not symmetric at ({}, {})", what, i, j));
}

} // namespace

CovarianceMatrix::CovarianceMatrix(std::vector<std::string> tickers, Eigen::MatrixXd c)
    : tickers_(std::move(tickers)), c_(std::move(c))
{
    check_square(c_, tickers_.size(), "covariance");
    check_symmetric(c_, 1e-12, "covariance");
    for (Eigen::Index i = 0; i < c_.rows(); ++i)
        if (c_(i, i) < 0.0)
            throw std::invalid_argument("covariance: negative variance for " + tickers_[static_cast<std::size_t>(i)]);
    if (c_.rows() > 0) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c_, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -kPsdTolerance)
            throw std::invalid_argument(
                fmt::format("covariance: not positive semidefinite (min eigenvalue {})", eig.eigenvalues().minCoeff()));
    }
}

CorrelationMatrix::CorrelationMatrix(std::vector<std::string> tickers, Eigen::MatrixXd rho)
    : tickers_(std::move(tickers)), rho_(std::move(rho))
{
    check_square(rho_, tickers_.size(), "correlation");
    check_symmetric(rho_, 1e-12, "correlation");
    for (Eigen::Index i = 0; i < rho_.rows(); ++i) {
        if (rho_(i, i) != 1.0)
            throw std::invalid_argument("correlation: diagonal must be exactly 1");
        for (Eigen::Index j = 0; j < rho_.cols(); ++j)
            if (rho_(i, j) < -1.0 || rho_(i, j) > 1.0)
                throw std::invalid_argument(fmt::format("correlation: entry ({}, {}) outside [-1, 1]", i, j));
    }
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> tickers, Eigen::MatrixXd d)
    : tickers_(std::move(tickers)), d_(std::move(d))
{
    check_square(d_, tickers_.size(), "distance");
    check_symmetric(d_, 0.0, "distance");
    for (Eigen::Index i = 0; i < d_.rows(); ++i) {
        if (d_(i, i) != 0.0)
            throw std::invalid_argument("distance: diagonal must be zero");
        if ((d_.row(i).array() < 0.0).any())
            throw std::invalid_argument("distance: negative entry");
    }
}

Linkage::Linkage(int n_leaves, std::vector<Merge> merges) : n_(n_leaves), merges_(std::move(merges))
{
    if (n_ < 1)
        throw std::invalid_argument("linkage: need at least one leaf");
    if (static_cast<int>(merges_.size()) != n_ - 1)
        throw std::invalid_argument(fmt::format("linkage: {} merges for {} leaves", merges_.size(), n_));
    std::vector<int> size(static_cast<std::size_t>(2 * n_ - 1), 0);
    std::vector<bool> used(size.size(), false);
    std::fill(size.begin(), size.begin() + n_, 1);
    for (std::size_t k = 0; k < merges_.size(); ++k) {
        const auto& m = merges_[k];
        const int node = n_ + static_cast<int>(k);
        for (const int child : {m.left, m.right}) {
            if (child < 0 || child >= node || used[static_cast<std::size_t>(child)])
                throw std::invalid_argument(fmt::format("linkage: merge {} references invalid node {}", k, child));
            used[static_cast<std::size_t>(child)] = true;
        }
        if (m.left == m.right || m.left_size != size[static_cast<std::size_t>(m.left)] ||
            m.right_size != size[static_cast<std::size_t>(m.right)] || m.size != m.left_size + m.right_size)
            throw std::invalid_argument(fmt::format("linkage: inconsistent sizes in merge {}", k));
        size[static_cast<std::size_t>(node)] = m.size;
    }
}

std::vector<int> Linkage::members(int node) const
{
    if (node < 0 || node >= 2 * n_ - 1)
        throw std::out_of_range(fmt::format("linkage: node {} out of range", node));
    std::vector<int> out;
    std::vector<int> stack{node};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (v < n_) {
            out.push_back(v);
        } else {
            const auto& m = merges_[static_cast<std::size_t>(v - n_)];
            stack.push_back(m.right);
            stack.push_back(m.left);
        }
    }
    return out;
}

std::vector<int> Linkage::leaf_order() const { return members(2 * n_ - 2); }

CovarianceMatrix covariance_matrix(const AlignedPanel& returns)
{
    if (returns.rows() < 2)
        throw std::invalid_argument("covariance_matrix: need at least 2 observations");
    const Eigen::MatrixXd& x = returns.values();
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const auto n = x.cols();
    const double denom = static_cast<double>(x.rows() - 1);
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            c(i, j) = c(j, i) = centered.col(i).dot(centered.col(j)) / denom;
    return CovarianceMatrix(returns.tickers(), std::move(c));
}

CorrelationMatrix correlation_matrix(const CovarianceMatrix& cov)
{
    const auto& c = cov.matrix();
    const auto n = c.rows();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(c(i, i) > 0.0))
            throw std::invalid_argument("correlation_matrix: zero variance for " + cov.tickers()[static_cast<std::size_t>(i)]);
    Eigen::MatrixXd rho(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rho(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j)
            rho(i, j) = rho(j, i) = std::clamp(c(i, j) / std::sqrt(c(i, i) * c(j, j)), -1.0, 1.0);
    }
    return CorrelationMatrix(cov.tickers(), std::move(rho));
}

DistanceMatrix correlation_distance(const CorrelationMatrix& corr, DistanceConvention convention)
{
    const auto& rho = corr.matrix();
    const auto n = rho.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = convention == DistanceConvention::correlation
                                 ? std::sqrt(std::max(0.0, (1.0 - rho(i, j)) / 2.0))
                                 : (rho.col(i) - rho.col(j)).norm();
            d(i, j) = d(j, i) = v;
        }
    return DistanceMatrix(corr.tickers(), std::move(d));
}

Linkage linkage(const DistanceMatrix& dist, LinkageMethod method)
{
    const int n = static_cast<int>(dist.size());
    if (n < 2)
        throw std::invalid_argument("linkage: need at least 2 assets");

    // Distances between active clusters, indexed by node id.
    const int total = 2 * n - 1;
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(total, total, std::numeric_limits<double>::quiet_NaN());
    d.topLeftCorner(n, n) = dist.matrix();
    std::vector<int> size(static_cast<std::size_t>(total), 0);
    std::fill(size.begin(), size.begin() + n, 1);
    std::vector<int> active(static_cast<std::size_t>(n));
    std::iota(active.begin(), active.end(), 0);

    std::vector<Merge> merges;
    merges.reserve(static_cast<std::size_t>(n - 1));
    for (int step = 0; step < n - 1; ++step) {
        // `active` stays sorted, so the first strict minimum is the smallest (left, right) pair.
        std::size_t best_a = 0, best_b = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < active.size(); ++a)
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const double v = d(active[a], active[b]);
                if (v < best) {
                    best = v;
                    best_a = a;
                    best_b = b;
                }
            }
        const int i = active[best_a];
        const int j = active[best_b];
        const int node = n + step;
        const int ni = size[static_cast<std::size_t>(i)];
        const int nj = size[static_cast<std::size_t>(j)];
        merges.push_back(Merge{i, j, best, ni, nj, ni + nj});
        size[static_cast<std::size_t>(node)] = ni + nj;

        active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_a));
        for (const int k : active) {
            const double dik = d(i, k);
            const double djk = d(j, k);
            double v = 0.0;
            switch (method) {
            case LinkageMethod::single:
                v = std::min(dik, djk);
                break;
            case LinkageMethod::complete:
                v = std::max(dik, djk);
                break;
            case LinkageMethod::ward: {
                const double nk = size[static_cast<std::size_t>(k)];
                const double t = nk + ni + nj;
                v = std::sqrt(std::max(0.0, ((ni + nk) * dik * dik + (nj + nk) * djk * djk - nk * best * best) / t));
                break;
            }
            }
            d(node, k) = d(k, node) = v;
        }
        active.push_back(node);
    }
    return Linkage(n, std::move(merges));
}

std::vector<int> cut_tree(const Linkage& l, int m)
{
    const int n = l.leaves();
    if (m < 1 || m > n)
        throw std::invalid_argument(fmt::format("cut_tree: cluster count {} outside [1, {}]", m, n));
    std::vector<int> parent(static_cast<std::size_t>(2 * n - 1));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v)
            v = parent[static_cast<std::size_t>(v)];
        return v;
    };
    for (int k = 0; k < n - m; ++k) {
        const auto& mg = l.merges()[static_cast<std::size_t>(k)];
        parent[static_cast<std::size_t>(find(mg.left))] = n + k;
        parent[static_cast<std::size_t>(find(mg.right))] = n + k;
    }
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    std::vector<int> root_to_cluster(static_cast<std::size_t>(2 * n - 1), -1);
    int next = 0;
    for (int leaf = 0; leaf < n; ++leaf) {
        const int r = find(leaf);
        if (root_to_cluster[static_cast<std::size_t>(r)] < 0)
            root_to_cluster[static_cast<std::size_t>(r)] = next++;
        assignment[static_cast<std::size_t>(leaf)] = root_to_cluster[static_cast<std::size_t>(r)];
    }
    return assignment;
}

ClusterRisk cluster_aggregates(const CovarianceMatrix& cov, const CorrelationMatrix& corr, const Linkage& l, int m)
{
    const auto n = cov.size();
    if (corr.size() != n || l.leaves() != n)
        throw std::invalid_argument("cluster_aggregates: covariance, correlation and linkage sizes differ");
    ClusterRisk out;
    out.assignment = cut_tree(l, m);
    const auto& c = cov.matrix();
    const auto& rho = corr.matrix();

    out.covariance = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd rho_sum = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd pair_count = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = 0; q < n; ++q) {
            const int a = out.assignment[static_cast<std::size_t>(p)];
            const int b = out.assignment[static_cast<std::size_t>(q)];
            out.covariance(a, b) += c(p, q);
            if (p != q) {
                rho_sum(a, b) += rho(p, q);
                pair_count(a, b) += 1.0;
            }
        }
    // The two triangles are summed in different orders; keep the upper one so
    // the aggregates are exactly symmetric.
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            out.covariance(j, i) = out.covariance(i, j);
            rho_sum(j, i) = rho_sum(i, j);
        }

    out.correlation = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double denom = std::sqrt(out.covariance(i, i) * out.covariance(j, j));
            out.correlation(i, j) = denom > 0.0 ? out.covariance(i, j) / denom : 0.0;
        }
    for (int i = 0; i < m; ++i)
        if (out.covariance(i, i) > 0.0)
            out.correlation(i, i) = 1.0;

    out.avg_corr_cluster.resize(m);
    out.avg_corr_cross = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        out.avg_corr_cluster(i) = pair_count(i, i) > 0.0 ? rho_sum(i, i) / pair_count(i, i) : 1.0;
        for (int j = 0; j < m; ++j)
            if (i != j)
                out.avg_corr_cross(i, j) = rho_sum(i, j) / pair_count(i, j);
    }
    return out;
}

std::string matrix_to_csv(const std::vector<std::string>& tickers, const Eigen::MatrixXd& m)
{
    std::string out = "ticker";
    for (const auto& t : tickers)
        out += "," + t;
    out += "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += tickers.at(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out += "," + csv::format_exact(m(i, j));
        out += "\n";
    }
    return out;
}

std::string linkage_to_csv(const Linkage& l)
{
    std::string out = "left,right,distance,size\n";
    for (const auto& m : l.merges())
        out += fmt::format("{},{},{},{}\n", m.left, m.right, csv::format_exact(m.distance), m.size);
    return out;
}

} // namespace idxf
