#include "doctest.h"

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "idxf/errors.hpp"
#include "idxf/evaluation.hpp"
#include "idxf/forecast.hpp"
#include "oracles.hpp"

using namespace idxf;

namespace {

oracle::Mat map_to_mat(const Model::ConstMatrixMap& m) { return oracle::to_mat(Eigen::MatrixXd(m)); }

oracle::Vec map_to_vec(const Model::ConstVectorMap& v) { return oracle::Vec(v.data(), v.data() + v.size()); }

std::vector<oracle::Vec> sample_column(const SequenceBatch& b, Eigen::Index col)
{
    std::vector<oracle::Vec> xs;
    for (const auto& step : b.steps) {
        oracle::Vec x(static_cast<std::size_t>(step.rows()));
        for (Eigen::Index r = 0; r < step.rows(); ++r)
            x[static_cast<std::size_t>(r)] = step(r, col);
        xs.push_back(x);
    }
    return xs;
}

double oracle_lstm(const Model& m, const std::vector<oracle::Vec>& xs)
{
    return oracle::lstm_sequence(map_to_mat(m.lstm_w()), map_to_mat(m.lstm_u()), map_to_vec(m.lstm_b()),
                                 map_to_vec(m.dense_w()), m.dense_b(), xs);
}

std::vector<oracle::Vec> oracle_conv(const Model& m, const std::vector<oracle::Vec>& xs)
{
    const auto& s = m.shape();
    const auto kernel = m.conv_kernel();
    std::vector<std::vector<oracle::Vec>> k(static_cast<std::size_t>(s.kernels),
                                            std::vector<oracle::Vec>(static_cast<std::size_t>(s.kernel_width),
                                                                     oracle::Vec(static_cast<std::size_t>(s.features))));
    for (int kk = 0; kk < s.kernels; ++kk)
        for (int w = 0; w < s.kernel_width; ++w)
            for (int f = 0; f < s.features; ++f)
                k[static_cast<std::size_t>(kk)][static_cast<std::size_t>(w)][static_cast<std::size_t>(f)] =
                    kernel(kk, w * s.features + f);
    return oracle::conv_relu_pool(k, map_to_vec(m.conv_bias()), xs);
}

WindowedDataset sine_split_train(std::size_t days, double noise, std::uint64_t seed, DatasetSplit* full = nullptr)
{
    auto split = chronological_split(make_windows(fixtures::sine_panel(days, noise, seed), 20), 0.8);
    if (full)
        *full = split;
    return split.train;
}

} // namespace

TEST_CASE("lstm_forward: all-zero parameters predict zero")
{
    ModelShape s;
    s.features = 2;
    s.hidden = 4;
    const Model m(s);
    auto d = gradcheck::random_draw(Architecture::lstm, 1, 2, 6, 3, 4);
    const auto r = lstm_forward(m, d.batch);
    for (Eigen::Index i = 0; i < r.prediction.size(); ++i)
        CHECK(r.prediction(i) == 0.0);
}

TEST_CASE("lstm_forward: matches the step-by-step cell oracle")
{
    for (int len : {1, 5}) {
        auto d = gradcheck::random_draw(Architecture::lstm, 100 + static_cast<std::uint64_t>(len), 2, len, 3, 4);
        const auto r = lstm_forward(d.model, d.batch);
        for (Eigen::Index col = 0; col < 3; ++col)
            CHECK(r.prediction(col) == doctest::Approx(oracle_lstm(d.model, sample_column(d.batch, col))).epsilon(1e-12));
    }
}

TEST_CASE("lstm_forward: gate activations stay in range")
{
    auto d = gradcheck::random_draw(Architecture::lstm, 7, 3, 10, 5, 6);
    d.model.parameters() *= 5.0;
    const auto r = lstm_forward(d.model, d.batch);
    for (std::size_t t = 0; t < r.cache.gate_i.size(); ++t) {
        for (const auto* g : {&r.cache.gate_i[t], &r.cache.gate_f[t], &r.cache.gate_o[t]}) {
            CHECK(g->minCoeff() > 0.0);
            CHECK(g->maxCoeff() < 1.0);
        }
        CHECK(r.cache.gate_g[t].minCoeff() > -1.0);
        CHECK(r.cache.gate_g[t].maxCoeff() < 1.0);
    }
}

TEST_CASE("forward: shape mismatches are rejected")
{
    auto d = gradcheck::random_draw(Architecture::lstm, 2, 3, 6, 2, 4);
    auto wrong = gradcheck::random_draw(Architecture::lstm, 2, 2, 6, 2, 4);
    CHECK_THROWS_AS(lstm_forward(d.model, wrong.batch), std::invalid_argument);
    CHECK_THROWS_AS(cnn_lstm_forward(d.model, d.batch), std::invalid_argument);
    auto cnn = gradcheck::random_draw(Architecture::cnn_lstm, 3, 2, 3, 2, 4, 3);
    CHECK_THROWS_AS(cnn_lstm_forward(cnn.model, cnn.batch), std::invalid_argument); // lookback 3 < 4
}

TEST_CASE("cnn_lstm: pooled length arithmetic")
{
    ModelShape s;
    s.arch = Architecture::cnn_lstm;
    CHECK(s.lstm_steps(20) == 9);
    for (int lookback = 4; lookback <= 64; ++lookback)
        CHECK(s.lstm_steps(lookback) == (lookback - 2) / 2);
    CHECK_THROWS_AS(s.lstm_steps(3), std::invalid_argument);
}

TEST_CASE("cnn_lstm_forward: constant input gives a constant conv output")
{
    auto d = gradcheck::random_draw(Architecture::cnn_lstm, 11, 2, 12, 2, 4, 3);
    auto& p = d.model.parameters();
    const auto& lay = d.model.layout();
    for (std::size_t i = lay.conv_kernel; i < lay.conv_bias; ++i)
        p(static_cast<Eigen::Index>(i)) = std::abs(p(static_cast<Eigen::Index>(i)));
    for (std::size_t i = lay.conv_bias; i < lay.lstm_w; ++i)
        p(static_cast<Eigen::Index>(i)) = 0.0;
    for (auto& step : d.batch.steps)
        step.setConstant(0.7);
    const auto r = cnn_lstm_forward(d.model, d.batch);
    for (std::size_t t = 1; t < r.cache.conv_pre.size(); ++t)
        CHECK((r.cache.conv_pre[t] - r.cache.conv_pre[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cnn_lstm_forward: matches nested-loop conv + pool + lstm oracle")
{
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        auto d = gradcheck::random_draw(Architecture::cnn_lstm, seed, 3, 11, 3, 4, 5);
        const auto r = cnn_lstm_forward(d.model, d.batch);
        for (Eigen::Index col = 0; col < 3; ++col) {
            const auto pooled = oracle_conv(d.model, sample_column(d.batch, col));
            REQUIRE(pooled.size() == r.cache.inputs.size());
            for (std::size_t t = 0; t < pooled.size(); ++t)
                for (std::size_t k = 0; k < pooled[t].size(); ++k)
                    CHECK(r.cache.inputs[t](static_cast<Eigen::Index>(k), col) ==
                          doctest::Approx(pooled[t][k]).epsilon(1e-12));
            CHECK(r.prediction(col) == doctest::Approx(oracle_lstm(d.model, pooled)).epsilon(1e-12));
        }
    }
}

TEST_CASE("loss_and_gradient: analytic gradients match central differences")
{
    for (auto arch : {Architecture::lstm, Architecture::cnn_lstm})
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const auto d = gradcheck::random_draw(arch, 500 + seed);
            CAPTURE(to_string(arch));
            CHECK(gradcheck::max_relative_error(d, 50, seed) < 1e-4);
        }
}

TEST_CASE("backward_and_step: zero learning rate leaves parameters unchanged")
{
    auto d = gradcheck::random_draw(Architecture::cnn_lstm, 31);
    const Eigen::VectorXd before = d.model.parameters();
    AdamState opt;
    const double loss = backward_and_step(d.model, d.batch, d.targets, opt, 0.0);
    CHECK(loss == doctest::Approx(batch_loss(d.model, d.batch, d.targets)).epsilon(1e-15));
    CHECK(d.model.parameters() == before);
}

TEST_CASE("backward_and_step: identical inputs give bit-identical updates")
{
    auto a = gradcheck::random_draw(Architecture::lstm, 41);
    auto b = gradcheck::random_draw(Architecture::lstm, 41);
    AdamState oa, ob;
    for (int i = 0; i < 3; ++i) {
        CHECK(backward_and_step(a.model, a.batch, a.targets, oa, 1e-2) ==
              backward_and_step(b.model, b.batch, b.targets, ob, 1e-2));
    }
    CHECK(a.model.parameters() == b.model.parameters());
}

TEST_CASE("backward_and_step: non-finite loss is a divergence")
{
    auto d = gradcheck::random_draw(Architecture::lstm, 43);
    d.targets(0) = std::nan("");
    AdamState opt;
    CHECK_THROWS_AS(backward_and_step(d.model, d.batch, d.targets, opt, 1e-3), DivergenceError);
}

TEST_CASE("train: one epoch at zero learning rate keeps the initial parameters")
{
    const auto ds = sine_split_train(200, 0.0, 1);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.learning_rate = 0.0;
    cfg.hidden = 8;
    cfg.seed = 99;
    const auto r = train(Architecture::lstm, ds, cfg);
    ModelShape s;
    s.features = 1;
    s.hidden = 8;
    std::mt19937_64 rng(99);
    CHECK(r.model.parameters() == Model::initialize(s, rng()).parameters());
    CHECK(r.loss_curve.size() == 1);
}

TEST_CASE("train: noiseless sine wave is learned")
{
    DatasetSplit split;
    sine_split_train(600, 0.0, 2, &split);
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.seed = 5;
    const auto r = train(Architecture::lstm, split.train, cfg);
    REQUIRE(r.loss_curve.size() == 100);
    for (double l : r.loss_curve)
        CHECK(std::isfinite(l));
    const double train_rmse = rmse(predict(r.model, split.train), split.train.y);
    MESSAGE("train RMSE " << train_rmse);
    CHECK(train_rmse < 0.05);
}

TEST_CASE("train + predict: tiny dataset is memorized")
{
    Eigen::MatrixXd v(8, 1);
    v << 0.1, 0.9, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6;
    const AlignedPanel panel({"X"}, business_days(fixtures::start_date(), 8), v);
    const auto ds = make_windows(panel, 4); // 4 samples
    TrainConfig cfg;
    cfg.epochs = 2000;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-2;
    cfg.hidden = 8;
    const auto r = train(Architecture::lstm, ds, cfg);
    const auto pred = predict(r.model, ds);
    CHECK(pred.size() == 4);
    CHECK(rmse(pred, ds.y) < 1e-2);
    CHECK(predict(r.model, ds) == pred);
}

TEST_CASE("train: deterministic per seed, differs across seeds")
{
    const auto ds = sine_split_train(150, 0.1, 3);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.hidden = 6;
    cfg.kernels = 4;
    cfg.seed = 17;
    const auto a = train(Architecture::cnn_lstm, ds, cfg);
    const auto b = train(Architecture::cnn_lstm, ds, cfg);
    CHECK(a.model.parameters() == b.model.parameters());
    CHECK(a.loss_curve == b.loss_curve);
    cfg.seed = 18;
    const auto c = train(Architecture::cnn_lstm, ds, cfg);
    CHECK(c.model.parameters() != a.model.parameters());
}

TEST_CASE("predict: feature count must match")
{
    const auto ds = sine_split_train(100, 0.0, 4);
    ModelShape s;
    s.features = 2;
    CHECK_THROWS_AS(predict(Model(s), ds), std::invalid_argument);
}

TEST_CASE("model serialization round-trips bit-exactly")
{
    for (auto arch : {Architecture::lstm, Architecture::cnn_lstm}) {
        ModelShape s;
        s.arch = arch;
        s.features = 12;
        const auto m = Model::initialize(s, 77);
        const auto bytes = serialize_model(m);
        CHECK(bytes.substr(0, 4) == "IDXF");
        CHECK(bytes.size() == 4 + 2 + 2 + 5 * 4 + 8 + 8 * s.parameter_count());
        const auto back = deserialize_model(bytes);
        CHECK(back.shape() == m.shape());
        CHECK(std::memcmp(back.parameters().data(), m.parameters().data(),
                          sizeof(double) * static_cast<std::size_t>(m.parameters().size())) == 0);
        CHECK(serialize_model(back) == bytes);
    }
}

TEST_CASE("model deserialization rejects corrupt input")
{
    ModelShape s;
    const auto bytes = serialize_model(Model::initialize(s, 1));
    CHECK_THROWS_AS(deserialize_model("NOPE" + bytes.substr(4)), ParseError);
    CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 3)), ParseError);
    CHECK_THROWS_AS(deserialize_model(bytes + "x"), ParseError);
}
