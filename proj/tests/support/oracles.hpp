#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Written with plain nested vectors and loops so they share no code
// path with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const Eigen::MatrixXd& m)
{
    Mat out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    return out;
}

inline Eigen::MatrixXd to_eigen(const Mat& m)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.empty() ? 0 : m[0].size()));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
    return out;
}

/// Random symmetric PSD matrix A A^T / k with A n x (n+3) uniform in [-1, 1].
inline Mat random_psd(std::size_t n, std::mt19937_64& rng, double scale = 1.0)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t k = n + 3;
    Mat a(n, Vec(k));
    for (auto& row : a)
        for (auto& v : row)
            v = u(rng);
    Mat c(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t)
                s += a[i][t] * a[j][t];
            c[i][j] = c[j][i] = scale * s / static_cast<double>(k);
        }
    return c;
}

/// Symmetric distance matrix with distinct positive off-diagonal entries.
inline Mat random_distance(std::size_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.01, 1.0);
    Mat d(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            d[i][j] = d[j][i] = u(rng);
    return d;
}

inline double mean(const Vec& x)
{
    double s = 0.0;
    for (double v : x)
        s += v;
    return s / static_cast<double>(x.size());
}

/// Two-pass sample covariance of two series.
inline double covariance(const Vec& x, const Vec& y)
{
    const double mx = mean(x), my = mean(y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size() - 1);
}

/// Columns are assets.
inline Mat covariance_matrix(const Mat& rows)
{
    const std::size_t n = rows[0].size();
    std::vector<Vec> cols(n);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < n; ++j)
            cols[j].push_back(r[j]);
    Mat c(n, Vec(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            c[i][j] = covariance(cols[i], cols[j]);
    return c;
}

// --- HRP, classic recursive bisection --------------------------------------

inline double ivp_variance(const Mat& c, const std::vector<int>& items)
{
    Vec w;
    double total = 0.0;
    for (int i : items) {
        w.push_back(1.0 / c[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]);
        total += w.back();
    }
    for (double& v : w)
        v /= total;
    double var = 0.0;
    for (std::size_t a = 0; a < items.size(); ++a)
        for (std::size_t b = 0; b < items.size(); ++b)
            var += w[a] * w[b] * c[static_cast<std::size_t>(items[a])][static_cast<std::size_t>(items[b])];
    return var;
}

inline void bisect(const Mat& c, const std::vector<int>& items, double budget, Vec& out)
{
    if (items.size() == 1) {
        out[static_cast<std::size_t>(items[0])] = budget;
        return;
    }
    const std::size_t half = items.size() / 2;
    const std::vector<int> left(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<int> right(items.begin() + static_cast<std::ptrdiff_t>(half), items.end());
    const double vl = ivp_variance(c, left);
    const double vr = ivp_variance(c, right);
    const double alpha = 1.0 - vl / (vl + vr);
    bisect(c, left, budget * alpha, out);
    bisect(c, right, budget * (1.0 - alpha), out);
}

inline Vec hrp_bisection(const Mat& c, const std::vector<int>& order)
{
    Vec out(c.size(), 0.0);
    bisect(c, order, 1.0, out);
    return out;
}

// --- HRP, node-merge pseudocode ---------------------------------------------

struct MergeRecord {
    int left, right;
    double distance;
};

inline Vec hrp_node_merge(const Mat& c, const std::vector<MergeRecord>& merges)
{
    const int n = static_cast<int>(c.size());
    std::vector<std::vector<int>> cluster(static_cast<std::size_t>(2 * n - 1));
    for (int i = 0; i < n; ++i)
        cluster[static_cast<std::size_t>(i)] = {i};
    Vec w(c.size(), 0.0);
    std::vector<bool> done(c.size(), false);
    for (std::size_t k = 0; k < merges.size(); ++k) {
        const auto& kk = cluster[static_cast<std::size_t>(merges[k].left)];
        const auto& jj = cluster[static_cast<std::size_t>(merges[k].right)];
        const double nk = static_cast<double>(kk.size());
        const double nj = static_cast<double>(jj.size());
        double sum = 0.0;
        for (int p : kk)
            for (int q : jj)
                sum += c[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
        double iv = sum / (nk * nj);
        if (iv <= 0.0)
            iv = 1e-12;
        for (int p : kk)
            if (!done[static_cast<std::size_t>(p)]) {
                w[static_cast<std::size_t>(p)] = iv * nk;
                done[static_cast<std::size_t>(p)] = true;
            }
        for (int q : jj)
            if (!done[static_cast<std::size_t>(q)]) {
                w[static_cast<std::size_t>(q)] = iv * nj;
                done[static_cast<std::size_t>(q)] = true;
            }
        auto merged = kk;
        merged.insert(merged.end(), jj.begin(), jj.end());
        cluster[static_cast<std::size_t>(n) + k] = merged;
    }
    double total = 0.0;
    for (double v : w)
        total += v;
    for (double& v : w)
        v /= total;
    return w;
}

// --- single linkage by exhaustive search over member pairs ------------------

inline std::vector<MergeRecord> single_linkage(const Mat& d)
{
    const int n = static_cast<int>(d.size());
    std::vector<std::pair<int, std::vector<int>>> active;
    for (int i = 0; i < n; ++i)
        active.push_back({i, {i}});
    std::vector<MergeRecord> out;
    for (int step = 0; step < n - 1; ++step) {
        double best = std::numeric_limits<double>::infinity();
        int bl = -1, br = -1;
        std::size_t ia = 0, ib = 0;
        for (std::size_t a = 0; a < active.size(); ++a)
            for (std::size_t b = 0; b < active.size(); ++b) {
                if (a == b)
                    continue;
                double m = std::numeric_limits<double>::infinity();
                for (int p : active[a].second)
                    for (int q : active[b].second)
                        m = std::min(m, d[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)]);
                const int lo = std::min(active[a].first, active[b].first);
                const int hi = std::max(active[a].first, active[b].first);
                if (m < best || (m == best && std::make_pair(lo, hi) < std::make_pair(bl, br))) {
                    best = m;
                    bl = lo;
                    br = hi;
                    ia = a;
                    ib = b;
                }
            }
        std::vector<int> merged = active[ia].second;
        merged.insert(merged.end(), active[ib].second.begin(), active[ib].second.end());
        out.push_back({bl, br, best});
        const std::size_t first = std::max(ia, ib), second = std::min(ia, ib);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(first));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(second));
        active.push_back({n + step, merged});
    }
    return out;
}

// --- long-only minimum variance by grid search (3 assets) --------------------

inline double grid_min_variance3(const Mat& c, double step = 0.01)
{
    const int steps = static_cast<int>(std::lround(1.0 / step));
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= steps; ++a)
        for (int b = 0; a + b <= steps; ++b) {
            const double w[3] = {a * step, b * step, (steps - a - b) * step};
            double v = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    v += w[i] * w[j] * c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            best = std::min(best, v);
        }
    return best;
}

// --- neural network pieces ----------------------------------------------------

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// LSTM over one sequence of input vectors. W: 4H x In, U: 4H x H, b: 4H,
/// gate order input, forget, cell, output.
inline double lstm_sequence(const Mat& W, const Mat& U, const Vec& b, const Vec& dense_w, double dense_b,
                            const std::vector<Vec>& xs)
{
    const std::size_t h = dense_w.size();
    Vec hs(h, 0.0), cs(h, 0.0);
    for (const auto& x : xs) {
        Vec z(4 * h, 0.0);
        for (std::size_t r = 0; r < 4 * h; ++r) {
            double s = b[r];
            for (std::size_t k = 0; k < x.size(); ++k)
                s += W[r][k] * x[k];
            for (std::size_t k = 0; k < h; ++k)
                s += U[r][k] * hs[k];
            z[r] = s;
        }
        Vec nh(h), nc(h);
        for (std::size_t k = 0; k < h; ++k) {
            const double i = sig(z[k]);
            const double f = sig(z[h + k]);
            const double g = std::tanh(z[2 * h + k]);
            const double o = sig(z[3 * h + k]);
            nc[k] = f * cs[k] + i * g;
            nh[k] = o * std::tanh(nc[k]);
        }
        hs = nh;
        cs = nc;
    }
    double out = dense_b;
    for (std::size_t k = 0; k < h; ++k)
        out += dense_w[k] * hs[k];
    return out;
}

/// Valid width-`width` convolution over time + ReLU + max-pool (window 2, stride 2).
/// kernel[k][w][f]; x[t][f]. Returns pooled[t][k].
inline std::vector<Vec> conv_relu_pool(const std::vector<std::vector<Vec>>& kernel, const Vec& bias,
                                       const std::vector<Vec>& x)
{
    const std::size_t kk = kernel.size();
    const std::size_t width = kernel[0].size();
    const std::size_t len = x.size() - width + 1;
    std::vector<Vec> conv(len, Vec(kk, 0.0));
    for (std::size_t t = 0; t < len; ++t)
        for (std::size_t k = 0; k < kk; ++k) {
            double s = bias[k];
            for (std::size_t w = 0; w < width; ++w)
                for (std::size_t f = 0; f < x[0].size(); ++f)
                    s += kernel[k][w][f] * x[t + w][f];
            conv[t][k] = std::max(0.0, s);
        }
    std::vector<Vec> pooled(len / 2, Vec(kk));
    for (std::size_t p = 0; p < len / 2; ++p)
        for (std::size_t k = 0; k < kk; ++k)
            pooled[p][k] = std::max(conv[2 * p][k], conv[2 * p + 1][k]);
    return pooled;
}

} // namespace oracle
