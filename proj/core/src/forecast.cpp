#include "idxf/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "idxf/errors.hpp"

namespace idxf {

std::string_view to_string(Architecture a) { return a == Architecture::lstm ? "lstm" : "cnn_lstm"; }

Architecture parse_architecture(std::string_view name)
{
    if (name == "lstm")
        return Architecture::lstm;
    if (name == "cnn_lstm")
        return Architecture::cnn_lstm;
    throw std::invalid_argument(fmt::format("unknown model '{}' (valid: lstm, cnn_lstm)", name));
}

std::size_t ModelShape::parameter_count() const noexcept { return ParamLayout(*this).total; }

void ModelShape::validate() const
{
    if (features < 1 || hidden < 1)
        throw std::invalid_argument("model shape: features and hidden must be positive");
    if (arch == Architecture::cnn_lstm && (kernels < 1 || kernel_width < 1 || pool < 1))
        throw std::invalid_argument("model shape: kernels, kernel width and pool must be positive");
}

int ModelShape::lstm_steps(int lookback) const
{
    if (arch == Architecture::lstm) {
        if (lookback < 1)
            throw std::invalid_argument("lookback must be positive");
        return lookback;
    }
    if (lookback < kernel_width + pool - 1)
        throw std::invalid_argument(fmt::format("cnn_lstm: lookback {} shorter than kernel width {} + pool {} - 1",
                                                lookback, kernel_width, pool));
    return (lookback - kernel_width + 1) / pool;
}

ParamLayout::ParamLayout(const ModelShape& s)
{
    std::size_t at = 0;
    auto take = [&](std::size_t n) {
        const auto start = at;
        at += n;
        return start;
    };
    const auto h = static_cast<std::size_t>(s.hidden);
    const auto in = static_cast<std::size_t>(s.lstm_inputs());
    if (s.arch == Architecture::cnn_lstm) {
        const auto k = static_cast<std::size_t>(s.kernels);
        conv_kernel = take(k * static_cast<std::size_t>(s.kernel_width * s.features));
        conv_bias = take(k);
    }
    lstm_w = take(4 * h * in);
    lstm_u = take(4 * h * h);
    lstm_b = take(4 * h);
    dense_w = take(h);
    dense_b = take(1);
    total = at;
}

Model::Model(ModelShape shape) : Model(shape, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ParamLayout(shape).total)))
{
}

Model::Model(ModelShape shape, Eigen::VectorXd parameters)
    : shape_(shape), layout_(shape), params_(std::move(parameters))
{
    shape_.validate();
    if (static_cast<std::size_t>(params_.size()) != layout_.total)
        throw std::invalid_argument(
            fmt::format("model: {} parameters given, shape needs {}", params_.size(), layout_.total));
}

Model Model::initialize(const ModelShape& shape, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    Model m(shape);
    auto fill = [&](std::size_t begin, std::size_t end, double fan_in) {
        const double bound = 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto i = begin; i < end; ++i)
            m.params_(static_cast<Eigen::Index>(i)) = u(rng);
    };
    const auto& l = m.layout_;
    if (shape.arch == Architecture::cnn_lstm)
        fill(l.conv_kernel, l.lstm_w, static_cast<double>(shape.kernel_width * shape.features));
    fill(l.lstm_w, l.total, static_cast<double>(shape.hidden));
    return m;
}

Model::ConstMatrixMap Model::conv_kernel() const
{
    return {params_.data() + layout_.conv_kernel, shape_.kernels, shape_.kernel_width * shape_.features};
}
Model::ConstVectorMap Model::conv_bias() const { return {params_.data() + layout_.conv_bias, shape_.kernels}; }
Model::ConstMatrixMap Model::lstm_w() const
{
    return {params_.data() + layout_.lstm_w, 4 * shape_.hidden, shape_.lstm_inputs()};
}
Model::ConstMatrixMap Model::lstm_u() const { return {params_.data() + layout_.lstm_u, 4 * shape_.hidden, shape_.hidden}; }
Model::ConstVectorMap Model::lstm_b() const { return {params_.data() + layout_.lstm_b, 4 * shape_.hidden}; }
Model::ConstVectorMap Model::dense_w() const { return {params_.data() + layout_.dense_w, shape_.hidden}; }
double Model::dense_b() const { return params_(static_cast<Eigen::Index>(layout_.dense_b)); }

SequenceBatch make_batch(const WindowedDataset& ds, std::span<const std::size_t> indices)
{
    SequenceBatch b;
    const auto f = static_cast<Eigen::Index>(ds.features());
    const auto n = static_cast<Eigen::Index>(indices.size());
    for (std::size_t t = 0; t < ds.lookback; ++t)
        b.steps.emplace_back(f, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        const auto& x = ds.X.at(indices[static_cast<std::size_t>(col)]);
        for (std::size_t t = 0; t < ds.lookback; ++t)
            b.steps[t].col(col) = x.row(static_cast<Eigen::Index>(t)).transpose();
    }
    return b;
}

SequenceBatch make_batch(const Eigen::MatrixXd& window)
{
    SequenceBatch b;
    for (Eigen::Index t = 0; t < window.rows(); ++t)
        b.steps.emplace_back(window.row(t).transpose());
    return b;
}

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

void check_batch(const Model& model, const SequenceBatch& batch)
{
    if (batch.steps.empty() || batch.batch() == 0)
        throw std::invalid_argument("forward: empty batch");
    for (const auto& s : batch.steps)
        if (s.rows() != model.shape().features || s.cols() != batch.batch())
            throw std::invalid_argument(fmt::format("forward: step is {}x{}, model expects {} features", s.rows(),
                                                    s.cols(), model.shape().features));
}

Eigen::RowVectorXd lstm_core(const Model& model, std::vector<Eigen::MatrixXd> inputs, ForwardCache& cache)
{
    const auto h = model.shape().hidden;
    const auto b = inputs.front().cols();
    const auto w = model.lstm_w();
    const auto u = model.lstm_u();
    const auto bias = model.lstm_b();
    Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(h, b);
    Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(h, b);
    for (const auto& x : inputs) {
        Eigen::MatrixXd z = w * x + u * h_prev;
        z.colwise() += bias;
        Eigen::MatrixXd gi = sigmoid(z.topRows(h));
        Eigen::MatrixXd gf = sigmoid(z.middleRows(h, h));
        Eigen::MatrixXd gg = z.middleRows(2 * h, h).array().tanh().matrix();
        Eigen::MatrixXd go = sigmoid(z.bottomRows(h));
        Eigen::MatrixXd c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
        Eigen::MatrixXd ct = c.array().tanh().matrix();
        Eigen::MatrixXd hh = go.cwiseProduct(ct);
        cache.gate_i.push_back(std::move(gi));
        cache.gate_f.push_back(std::move(gf));
        cache.gate_g.push_back(std::move(gg));
        cache.gate_o.push_back(std::move(go));
        cache.cell.push_back(c);
        cache.cell_tanh.push_back(std::move(ct));
        cache.hidden.push_back(hh);
        h_prev = std::move(hh);
        c_prev = std::move(c);
    }
    cache.inputs = std::move(inputs);
    Eigen::RowVectorXd pred = model.dense_w().transpose() * h_prev;
    pred.array() += model.dense_b();
    return pred;
}

} // namespace

ForwardResult lstm_forward(const Model& model, const SequenceBatch& batch)
{
    if (model.shape().arch != Architecture::lstm)
        throw std::invalid_argument("lstm_forward: model is not an lstm");
    check_batch(model, batch);
    ForwardResult r;
    r.prediction = lstm_core(model, batch.steps, r.cache);
    return r;
}

ForwardResult cnn_lstm_forward(const Model& model, const SequenceBatch& batch)
{
    const auto& s = model.shape();
    if (s.arch != Architecture::cnn_lstm)
        throw std::invalid_argument("cnn_lstm_forward: model is not a cnn_lstm");
    check_batch(model, batch);
    const int lookback = static_cast<int>(batch.steps.size());
    const int pooled = s.lstm_steps(lookback);
    const int conv_len = lookback - s.kernel_width + 1;
    const auto b = batch.batch();
    const auto f = s.features;

    ForwardResult r;
    auto& cache = r.cache;
    const auto kernel = model.conv_kernel();
    const auto bias = model.conv_bias();
    std::vector<Eigen::MatrixXd> activated;
    for (int t = 0; t < conv_len; ++t) {
        Eigen::MatrixXd stack(s.kernel_width * f, b);
        for (int w = 0; w < s.kernel_width; ++w)
            stack.middleRows(w * f, f) = batch.steps[static_cast<std::size_t>(t + w)];
        Eigen::MatrixXd pre = kernel * stack;
        pre.colwise() += bias;
        activated.push_back(pre.cwiseMax(0.0));
        cache.conv_stack.push_back(std::move(stack));
        cache.conv_pre.push_back(std::move(pre));
    }

    std::vector<Eigen::MatrixXd> pooled_steps;
    for (int p = 0; p < pooled; ++p) {
        Eigen::MatrixXd out(s.kernels, b);
        Eigen::MatrixXi pick(s.kernels, b);
        for (Eigen::Index col = 0; col < b; ++col)
            for (Eigen::Index k = 0; k < s.kernels; ++k) {
                int best = 0;
                double v = activated[static_cast<std::size_t>(p * s.pool)](k, col);
                for (int j = 1; j < s.pool; ++j) {
                    const double cand = activated[static_cast<std::size_t>(p * s.pool + j)](k, col);
                    if (cand > v) {
                        v = cand;
                        best = j;
                    }
                }
                out(k, col) = v;
                pick(k, col) = best;
            }
        pooled_steps.push_back(std::move(out));
        cache.pool_pick.push_back(std::move(pick));
    }
    r.prediction = lstm_core(model, std::move(pooled_steps), cache);
    return r;
}

ForwardResult forward(const Model& model, const SequenceBatch& batch)
{
    return model.shape().arch == Architecture::lstm ? lstm_forward(model, batch) : cnn_lstm_forward(model, batch);
}

double batch_loss(const Model& model, const SequenceBatch& batch, const Eigen::VectorXd& targets)
{
    const auto r = forward(model, batch);
    if (targets.size() != r.prediction.size())
        throw std::invalid_argument("batch_loss: target count differs from batch size");
    return (r.prediction.transpose() - targets).squaredNorm() / static_cast<double>(targets.size());
}

LossAndGradient loss_and_gradient(const Model& model, const SequenceBatch& batch, const Eigen::VectorXd& targets)
{
    const auto& s = model.shape();
    const auto& lay = model.layout();
    auto fwd = forward(model, batch);
    const auto& cache = fwd.cache;
    const auto b = batch.batch();
    if (targets.size() != b)
        throw std::invalid_argument("loss_and_gradient: target count differs from batch size");

    LossAndGradient out;
    const Eigen::RowVectorXd err = fwd.prediction - targets.transpose();
    out.loss = err.squaredNorm() / static_cast<double>(b);
    out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lay.total));
    double* g = out.gradient.data();

    const int h = s.hidden;
    const int in = s.lstm_inputs();
    Eigen::Map<Eigen::MatrixXd> dW(g + lay.lstm_w, 4 * h, in);
    Eigen::Map<Eigen::MatrixXd> dU(g + lay.lstm_u, 4 * h, h);
    Eigen::Map<Eigen::VectorXd> db(g + lay.lstm_b, 4 * h);
    Eigen::Map<Eigen::VectorXd> dDense(g + lay.dense_w, h);

    const Eigen::RowVectorXd dpred = (2.0 / static_cast<double>(b)) * err;
    const auto steps = cache.hidden.size();
    dDense = cache.hidden.back() * dpred.transpose();
    g[lay.dense_b] = dpred.sum();

    const auto w = model.lstm_w();
    const auto u = model.lstm_u();
    Eigen::MatrixXd dh = model.dense_w() * dpred;
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(h, b);
    Eigen::MatrixXd dz(4 * h, b);
    std::vector<Eigen::MatrixXd> dinputs(steps);
    for (std::size_t t = steps; t-- > 0;) {
        const auto& gi = cache.gate_i[t];
        const auto& gf = cache.gate_f[t];
        const auto& gg = cache.gate_g[t];
        const auto& go = cache.gate_o[t];
        const auto& ct = cache.cell_tanh[t];
        dc.array() += dh.array() * go.array() * (1.0 - ct.array().square());
        const Eigen::MatrixXd c_prev = t > 0 ? cache.cell[t - 1] : Eigen::MatrixXd::Zero(h, b);
        const Eigen::MatrixXd h_prev = t > 0 ? cache.hidden[t - 1] : Eigen::MatrixXd::Zero(h, b);
        dz.topRows(h) = (dc.array() * gg.array() * gi.array() * (1.0 - gi.array())).matrix();
        dz.middleRows(h, h) = (dc.array() * c_prev.array() * gf.array() * (1.0 - gf.array())).matrix();
        dz.middleRows(2 * h, h) = (dc.array() * gi.array() * (1.0 - gg.array().square())).matrix();
        dz.bottomRows(h) = (dh.array() * ct.array() * go.array() * (1.0 - go.array())).matrix();
        dW.noalias() += dz * cache.inputs[t].transpose();
        dU.noalias() += dz * h_prev.transpose();
        db += dz.rowwise().sum();
        dh.noalias() = u.transpose() * dz;
        dc = dc.cwiseProduct(gf);
        if (s.arch == Architecture::cnn_lstm)
            dinputs[t].noalias() = w.transpose() * dz;
    }

    if (s.arch == Architecture::cnn_lstm) {
        const int f = s.features;
        Eigen::Map<Eigen::MatrixXd> dK(g + lay.conv_kernel, s.kernels, s.kernel_width * f);
        Eigen::Map<Eigen::VectorXd> dbias(g + lay.conv_bias, s.kernels);
        const auto conv_len = cache.conv_pre.size();
        std::vector<Eigen::MatrixXd> dconv(conv_len, Eigen::MatrixXd::Zero(s.kernels, b));
        for (std::size_t p = 0; p < steps; ++p) {
            const auto& pick = cache.pool_pick[p];
            for (Eigen::Index col = 0; col < b; ++col)
                for (Eigen::Index k = 0; k < s.kernels; ++k)
                    dconv[p * static_cast<std::size_t>(s.pool) + static_cast<std::size_t>(pick(k, col))](k, col) +=
                        dinputs[p](k, col);
        }
        for (std::size_t t = 0; t < conv_len; ++t) {
            const Eigen::MatrixXd dpre = (cache.conv_pre[t].array() > 0.0).cast<double>().matrix().cwiseProduct(dconv[t]);
            dK.noalias() += dpre * cache.conv_stack[t].transpose();
            dbias += dpre.rowwise().sum();
        }
    }
    return out;
}

double backward_and_step(Model& model, const SequenceBatch& batch, const Eigen::VectorXd& targets, AdamState& opt,
                         double learning_rate)
{
    auto lg = loss_and_gradient(model, batch, targets);
    if (!std::isfinite(lg.loss) || !lg.gradient.allFinite())
        throw DivergenceError("non-finite loss during training", -1);
    const auto n = model.parameters().size();
    if (opt.m.size() != n) {
        opt.m = Eigen::VectorXd::Zero(n);
        opt.v = Eigen::VectorXd::Zero(n);
        opt.step = 0;
    }
    ++opt.step;
    opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * lg.gradient;
    opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * lg.gradient.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    if (learning_rate != 0.0)
        model.parameters().array() -=
            learning_rate * (opt.m.array() / bc1) / ((opt.v.array() / bc2).sqrt() + opt.epsilon);
    return lg.loss;
}

void TrainConfig::validate() const
{
    if (epochs < 1)
        throw std::invalid_argument("training: epochs must be >= 1");
    if (runs < 1)
        throw std::invalid_argument("training: runs must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("training: learning rate must be finite and nonnegative");
    if (batch_size < 1)
        throw std::invalid_argument("training: batch size must be >= 1");
    if (hidden < 1 || kernels < 1)
        throw std::invalid_argument("training: hidden and kernels must be >= 1");
    if (max_parallelism < 1)
        throw std::invalid_argument("training: max_parallelism must be >= 1");
}

TrainResult train(Architecture arch, const WindowedDataset& ds, const TrainConfig& cfg)
{
    cfg.validate();
    if (ds.samples() == 0)
        throw std::invalid_argument("train: empty training split");
    ModelShape shape;
    shape.arch = arch;
    shape.features = static_cast<int>(ds.features());
    shape.hidden = cfg.hidden;
    shape.kernels = cfg.kernels;
    shape.lstm_steps(static_cast<int>(ds.lookback));

    std::mt19937_64 rng(cfg.seed);
    TrainResult out{Model::initialize(shape, rng()), {}};
    AdamState opt;
    opt.beta1 = cfg.beta1;
    opt.beta2 = cfg.beta2;
    opt.epsilon = cfg.epsilon;

    std::vector<std::size_t> order(ds.samples());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const auto count = std::min(bs, order.size() - start);
            const std::span<const std::size_t> idx(order.data() + start, count);
            const auto batch = make_batch(ds, idx);
            Eigen::VectorXd y(static_cast<Eigen::Index>(count));
            for (std::size_t i = 0; i < count; ++i)
                y(static_cast<Eigen::Index>(i)) = ds.y(static_cast<Eigen::Index>(idx[i]));
            try {
                sum += backward_and_step(out.model, batch, y, opt, cfg.learning_rate) * static_cast<double>(count);
            } catch (const DivergenceError&) {
                throw DivergenceError(fmt::format("training diverged in epoch {}", epoch + 1), epoch + 1);
            }
        }
        out.loss_curve.push_back(sum / static_cast<double>(order.size()));
    }
    return out;
}

Eigen::VectorXd predict(const Model& model, const WindowedDataset& ds)
{
    if (static_cast<int>(ds.features()) != model.shape().features)
        throw std::invalid_argument(fmt::format("predict: dataset has {} features, model expects {}", ds.features(),
                                                model.shape().features));
    Eigen::VectorXd out(static_cast<Eigen::Index>(ds.samples()));
    constexpr std::size_t chunk = 256;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < ds.samples(); start += chunk) {
        const auto count = std::min(chunk, ds.samples() - start);
        idx.resize(count);
        std::iota(idx.begin(), idx.end(), start);
        const auto r = forward(model, make_batch(ds, idx));
        out.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)) = r.prediction.transpose();
    }
    return out;
}

} // namespace idxf
