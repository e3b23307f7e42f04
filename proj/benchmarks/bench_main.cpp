#include <random>

#include <benchmark/benchmark.h>

#include "idxf/allocation.hpp"
#include "idxf/dataset.hpp"
#include "idxf/forecast.hpp"
#include "idxf/riskmodel.hpp"

using namespace idxf;

namespace {

CovarianceMatrix random_covariance(std::size_t n, std::uint64_t seed)
{
    BlockStructure blocks{{n}, 0.4, 0.0, {}, 0.0};
    return covariance_matrix(generate_synthetic_panel(n, 750, blocks, seed));
}

DistanceMatrix random_distance(std::size_t n, std::uint64_t seed)
{
    return correlation_distance(correlation_matrix(random_covariance(n, seed)));
}

void BM_Linkage(benchmark::State& state)
{
    const auto method = static_cast<LinkageMethod>(state.range(1));
    const auto d = random_distance(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(linkage(d, method));
}
BENCHMARK(BM_Linkage)->ArgsProduct({{8, 32, 128}, {0, 1, 2}});

void BM_HrpPaper(benchmark::State& state)
{
    const auto c = random_covariance(static_cast<std::size_t>(state.range(0)), 2);
    const auto l = linkage(correlation_distance(correlation_matrix(c)));
    for (auto _ : state)
        benchmark::DoNotOptimize(hrp_paper(c, l));
}
BENCHMARK(BM_HrpPaper)->Arg(8)->Arg(32)->Arg(128);

void BM_HrpBisection(benchmark::State& state)
{
    const auto c = random_covariance(static_cast<std::size_t>(state.range(0)), 3);
    const auto order = linkage(correlation_distance(correlation_matrix(c))).leaf_order();
    for (auto _ : state)
        benchmark::DoNotOptimize(hrp_recursive_bisection(c, order));
}
BENCHMARK(BM_HrpBisection)->Arg(8)->Arg(32)->Arg(128);

void BM_MinVariance(benchmark::State& state)
{
    const auto c = random_covariance(static_cast<std::size_t>(state.range(0)), 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(min_variance_long_only(c));
}
BENCHMARK(BM_MinVariance)->Arg(8)->Arg(32);

/// One Adam step on a batch of 32 windows of 20 days x 12 features.
void BM_TrainStep(benchmark::State& state)
{
    ModelShape s;
    s.arch = static_cast<Architecture>(state.range(0));
    s.features = 12;
    auto model = Model::initialize(s, 5);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SequenceBatch batch;
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd step(12, 32);
        for (Eigen::Index i = 0; i < step.size(); ++i)
            step.data()[i] = u(rng);
        batch.steps.push_back(step);
    }
    Eigen::VectorXd y(32);
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y(i) = u(rng);
    AdamState opt;
    for (auto _ : state)
        benchmark::DoNotOptimize(backward_and_step(model, batch, y, opt, 1e-4));
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->ArgName("cnn");

} // namespace

BENCHMARK_MAIN();
