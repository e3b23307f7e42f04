#include "idxf/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "idxf/csv.hpp"
#include "idxf/errors.hpp"

namespace idxf {

Weights::Weights(std::vector<std::string> tickers, Eigen::VectorXd w) : tickers_(std::move(tickers)), w_(std::move(w))
{
    if (tickers_.empty())
        throw std::invalid_argument("weights: empty portfolio");
    if (static_cast<std::size_t>(w_.size()) != tickers_.size())
        throw std::invalid_argument(fmt::format("weights: {} values for {} tickers", w_.size(), tickers_.size()));
    if (!w_.allFinite() || (w_.array() < 0.0).any())
        throw std::invalid_argument("weights: entries must be finite and nonnegative");
    if (std::abs(w_.sum() - 1.0) > 1e-12)
        throw std::invalid_argument(fmt::format("weights: sum {} differs from 1", w_.sum()));
}

namespace {

std::vector<std::string> default_tickers(std::size_t n)
{
    std::vector<std::string> t;
    for (std::size_t i = 0; i < n; ++i)
        t.push_back(fmt::format("A{}", i));
    return t;
}

} // namespace

HrpPaperResult hrp_paper(const CovarianceMatrix& cov, const Linkage& l)
{
    const auto& c = cov.matrix();
    const int n = static_cast<int>(cov.size());
    if (l.leaves() != n)
        throw std::invalid_argument(fmt::format("hrp_paper: linkage has {} leaves, covariance {} assets", l.leaves(), n));

    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    std::vector<bool> assigned(static_cast<std::size_t>(n), false);
    std::vector<double> node_values;
    std::vector<std::string> warnings;

    for (std::size_t k = 0; k < l.merges().size(); ++k) {
        const auto& m = l.merges()[k];
        const auto left = l.members(m.left);
        const auto right = l.members(m.right);
        double cross = 0.0;
        for (const int p : left)
            for (const int q : right)
                cross += c(p, q);
        const double value = cross / (static_cast<double>(m.left_size) * static_cast<double>(m.right_size));
        node_values.push_back(value);

        double used = value;
        if (!(value > 0.0)) {
            used = kDegenerateNodeValue;
            warnings.push_back(fmt::format("merge {} ({} + {}): mean cross-covariance {} <= 0, using {}", k, m.left,
                                           m.right, value, kDegenerateNodeValue));
        }
        for (const int p : left)
            if (!assigned[static_cast<std::size_t>(p)]) {
                w(p) = used * m.left_size;
                assigned[static_cast<std::size_t>(p)] = true;
            }
        for (const int q : right)
            if (!assigned[static_cast<std::size_t>(q)]) {
                w(q) = used * m.right_size;
                assigned[static_cast<std::size_t>(q)] = true;
            }
    }
    if (n == 1) {
        w(0) = 1.0;
        assigned[0] = true;
    }
    for (int i = 0; i < n; ++i)
        if (!assigned[static_cast<std::size_t>(i)])
            throw std::logic_error(fmt::format("hrp_paper: leaf {} never assigned", i));

    const double total = w.sum();
    if (!(total > 0.0))
        throw std::invalid_argument(fmt::format("hrp_paper: weight total {} is not positive; covariance indefinite", total));
    w /= total;
    return HrpPaperResult{Weights(cov.tickers(), std::move(w)), std::move(node_values), std::move(warnings)};
}

Weights hrp_recursive_bisection(const CovarianceMatrix& cov, const std::vector<int>& order)
{
    const auto& c = cov.matrix();
    const auto n = static_cast<std::size_t>(cov.size());
    if (order.size() != n)
        throw std::invalid_argument("hrp_recursive_bisection: order is not a permutation of the assets");
    {
        std::vector<int> sorted(order);
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n; ++i)
            if (sorted[i] != static_cast<int>(i))
                throw std::invalid_argument("hrp_recursive_bisection: order is not a permutation of the assets");
    }

    // Variance of a sub-portfolio held in inverse-variance proportions.
    auto cluster_variance = [&](std::span<const int> items) {
        Eigen::VectorXd ivp(static_cast<Eigen::Index>(items.size()));
        for (std::size_t a = 0; a < items.size(); ++a) {
            const double v = c(items[a], items[a]);
            if (!(v > 0.0))
                throw std::invalid_argument("hrp_recursive_bisection: zero variance for " +
                                            cov.tickers()[static_cast<std::size_t>(items[a])]);
            ivp(static_cast<Eigen::Index>(a)) = 1.0 / v;
        }
        ivp /= ivp.sum();
        double var = 0.0;
        for (std::size_t a = 0; a < items.size(); ++a)
            for (std::size_t b = 0; b < items.size(); ++b)
                var += ivp(static_cast<Eigen::Index>(a)) * c(items[a], items[b]) * ivp(static_cast<Eigen::Index>(b));
        return var;
    };

    Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    std::vector<std::span<const int>> pending{std::span<const int>(order)};
    while (!pending.empty()) {
        std::vector<std::span<const int>> next;
        for (const auto cluster : pending) {
            if (cluster.size() < 2)
                continue;
            const auto half = cluster.size() / 2;
            const auto left = cluster.first(half);
            const auto right = cluster.subspan(half);
            const double v_left = cluster_variance(left);
            const double v_right = cluster_variance(right);
            const double alpha = 1.0 - v_left / (v_left + v_right);
            for (const int i : left)
                w(i) *= alpha;
            for (const int i : right)
                w(i) *= 1.0 - alpha;
            next.push_back(left);
            next.push_back(right);
        }
        pending = std::move(next);
    }
    // Exact in real arithmetic; rescale away rounding drift.
    w /= w.sum();
    return Weights(cov.tickers(), std::move(w));
}

Weights equal_weight(std::size_t n) { return equal_weight(default_tickers(n)); }

Weights equal_weight(const std::vector<std::string>& tickers)
{
    if (tickers.empty())
        throw std::invalid_argument("equal_weight: n must be at least 1");
    const auto n = static_cast<Eigen::Index>(tickers.size());
    return Weights(tickers, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v)
{
    const auto n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumsum += u[static_cast<std::size_t>(k)];
        const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (u[static_cast<std::size_t>(k)] - t > 0.0)
            theta = t;
    }
    Eigen::VectorXd w = (v.array() - theta).max(0.0).matrix();
    const double s = w.sum();
    if (s > 0.0)
        w /= s;
    return w;
}

MinVarianceResult min_variance_long_only(const CovarianceMatrix& cov, const MinVarianceOptions& opts)
{
    const auto& c = cov.matrix();
    const auto n = c.rows();
    if (n == 0)
        throw std::invalid_argument("min_variance_long_only: empty covariance");

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
    const double lipschitz = 2.0 * eig.eigenvalues().maxCoeff();
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    if (!(lipschitz > 0.0)) // C == 0: every feasible point is optimal
        return MinVarianceResult{Weights(cov.tickers(), w), 0.0, 0};

    const double step = 1.0 / lipschitz;
    double objective = w.dot(c * w);
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const Eigen::VectorXd grad = 2.0 * (c * w);
        Eigen::VectorXd next = project_to_simplex(w - step * grad);
        const double next_obj = next.dot(c * next);
        const double moved = (next - w).cwiseAbs().maxCoeff();
        const bool flat = std::abs(objective - next_obj) <= opts.objective_tolerance * std::abs(next_obj);
        w = std::move(next);
        objective = next_obj;
        if (moved <= opts.step_tolerance || (flat && moved <= 1e-10))
            return MinVarianceResult{Weights(cov.tickers(), w), std::max(0.0, objective), it};
    }
    throw ConvergenceError(fmt::format("min_variance_long_only: no convergence in {} iterations", opts.max_iterations),
                           w, objective);
}

PortfolioMoments portfolio_moments(const Weights& w, const Eigen::VectorXd& mu, const CovarianceMatrix& c)
{
    const auto n = static_cast<Eigen::Index>(w.size());
    if (mu.size() != n || c.size() != n)
        throw std::invalid_argument(fmt::format("portfolio_moments: {} weights, {} means, {}x{} covariance", n,
                                                mu.size(), c.size(), c.size()));
    const auto& v = w.values();
    return PortfolioMoments{v.dot(mu), std::max(0.0, v.dot(c.matrix() * v))};
}

double literal_equal_weight_return(const Weights& w, const Eigen::VectorXd& mu)
{
    if (mu.size() != static_cast<Eigen::Index>(w.size()))
        throw std::invalid_argument("literal_equal_weight_return: dimension mismatch");
    return w.values().dot(mu) / static_cast<double>(w.size());
}

double literal_equal_weight_variance(const Weights& w, const Eigen::VectorXd& mu)
{
    if (mu.size() != static_cast<Eigen::Index>(w.size()))
        throw std::invalid_argument("literal_equal_weight_variance: dimension mismatch");
    return (w.values().array().square() * mu.array().square()).sum() / static_cast<double>(w.size());
}

Strategy parse_strategy(std::string_view name)
{
    if (name == "hrp_paper")
        return Strategy::hrp_paper;
    if (name == "hrp_bisection")
        return Strategy::hrp_bisection;
    if (name == "equal_weight")
        return Strategy::equal_weight;
    if (name == "min_variance")
        return Strategy::min_variance;
    throw std::invalid_argument(fmt::format("unknown strategy '{}' (valid: {})", name, strategy_names()));
}

std::string_view to_string(Strategy s)
{
    switch (s) {
    case Strategy::hrp_paper:
        return "hrp_paper";
    case Strategy::hrp_bisection:
        return "hrp_bisection";
    case Strategy::equal_weight:
        return "equal_weight";
    case Strategy::min_variance:
        return "min_variance";
    }
    return "?";
}

std::string strategy_names() { return "hrp_paper, hrp_bisection, equal_weight, min_variance"; }

std::string weights_to_csv(const Weights& w, int decimals)
{
    std::string out = "ticker,weight\n";
    for (std::size_t i = 0; i < w.size(); ++i)
        out += w.tickers()[i] + "," +
               (decimals < 0 ? csv::format_exact(w[i]) : fmt::format("{:.{}f}", w[i], decimals)) + "\n";
    return out;
}

Weights read_weights_csv(const std::filesystem::path& path)
{
    const auto lines = csv::read_lines(path);
    const std::string where = path.filename().string();
    if (lines.empty() || csv::trim(lines[0]) != "ticker,weight")
        throw ParseError(where + ": expected header 'ticker,weight'", 1);
    std::vector<std::string> tickers;
    std::vector<double> values;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (csv::trim(lines[ln]).empty())
            continue;
        const auto cells = csv::split_row(lines[ln]);
        double v = 0.0;
        if (cells.size() != 2 || !csv::parse_double(cells[1], v))
            throw ParseError(fmt::format("{}:{}: malformed weight row", where, ln + 1), ln + 1);
        tickers.emplace_back(csv::trim(cells[0]));
        values.push_back(v);
    }
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    // 4-decimal files do not sum to 1 exactly.
    if (w.size() > 0 && w.sum() > 0.0)
        w /= w.sum();
    return Weights(std::move(tickers), std::move(w));
}

} // namespace idxf
