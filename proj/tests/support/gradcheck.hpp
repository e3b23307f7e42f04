#pragma once

// Central finite-difference check of analytic gradients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "idxf/forecast.hpp"

namespace gradcheck {

struct Draw {
    idxf::Model model;
    idxf::SequenceBatch batch;
    Eigen::VectorXd targets;
};

/// Random model, batch and targets. Inputs uniform in [0, 1] like scaled data.
inline Draw random_draw(idxf::Architecture arch, std::uint64_t seed, int features = 3, int lookback = 8,
                        int batch = 4, int hidden = 5, int kernels = 4)
{
    idxf::ModelShape shape;
    shape.arch = arch;
    shape.features = features;
    shape.hidden = hidden;
    shape.kernels = kernels;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    std::uniform_real_distribution<double> x01(0.0, 1.0);
    idxf::Model model(shape);
    for (Eigen::Index i = 0; i < model.parameters().size(); ++i)
        model.parameters()(i) = u(rng);
    idxf::SequenceBatch b;
    for (int t = 0; t < lookback; ++t) {
        Eigen::MatrixXd step(features, batch);
        for (Eigen::Index r = 0; r < step.rows(); ++r)
            for (Eigen::Index c = 0; c < step.cols(); ++c)
                step(r, c) = x01(rng);
        b.steps.push_back(step);
    }
    Eigen::VectorXd y(batch);
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y(i) = x01(rng);
    return {std::move(model), std::move(b), std::move(y)};
}

inline double relative_error(double analytic, double numeric)
{
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

/// Max relative error over `samples` randomly chosen parameters.
inline double max_relative_error(const Draw& d, int samples, std::uint64_t seed, double step = 1e-5)
{
    const auto analytic = idxf::loss_and_gradient(d.model, d.batch, d.targets).gradient;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, analytic.size() - 1);
    double worst = 0.0;
    idxf::Model probe = d.model;
    for (int s = 0; s < samples; ++s) {
        const auto i = pick(rng);
        const double orig = probe.parameters()(i);
        probe.parameters()(i) = orig + step;
        const double up = idxf::batch_loss(probe, d.batch, d.targets);
        probe.parameters()(i) = orig - step;
        const double down = idxf::batch_loss(probe, d.batch, d.targets);
        probe.parameters()(i) = orig;
        worst = std::max(worst, relative_error(analytic(i), (up - down) / (2.0 * step)));
    }
    return worst;
}

} // namespace gradcheck
