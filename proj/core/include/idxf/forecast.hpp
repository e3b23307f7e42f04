#pragma once

/**
 * @file forecast.hpp
 * @brief LSTM and CNN-LSTM regressors with exact backpropagation through time.
 *
 * All parameters of a model live in one flat vector, in this order:
 *
 *   cnn_lstm only:
 *     conv kernel   K x (width*F)  column-major; column w*F+f holds tap w of channel f
 *     conv bias     K
 *   both:
 *     lstm W        4H x In        column-major, gate blocks [input, forget, cell, output]
 *     lstm U        4H x H         column-major, same gate blocks
 *     lstm b        4H
 *     dense w       H
 *     dense b       1
 *
 * where In = K for cnn_lstm and In = F for lstm.
 *
 * The CNN front end is a valid (unpadded) width-3 convolution over time,
 * ReLU, then max pooling with window 2 and stride 2, so a lookback of L
 * produces floor((L-2)/2) LSTM steps.
 */

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "idxf/dataset.hpp"

namespace idxf {

enum class Architecture : std::uint16_t { lstm = 0, cnn_lstm = 1 };

std::string_view to_string(Architecture a);
Architecture parse_architecture(std::string_view name);

struct ModelShape {
    Architecture arch = Architecture::lstm;
    int features = 1;     ///< F
    int hidden = 32;      ///< H
    int kernels = 16;     ///< K (cnn_lstm only)
    int kernel_width = 3;
    int pool = 2;

    int lstm_inputs() const noexcept { return arch == Architecture::cnn_lstm ? kernels : features; }
    std::size_t parameter_count() const noexcept;
    /// LSTM steps for a given lookback; throws if the window is too short.
    int lstm_steps(int lookback) const;
    void validate() const;

    bool operator==(const ModelShape&) const = default;
};

/// Offsets of each parameter block inside the flat vector.
struct ParamLayout {
    explicit ParamLayout(const ModelShape& s);

    std::size_t conv_kernel = 0, conv_bias = 0;
    std::size_t lstm_w = 0, lstm_u = 0, lstm_b = 0;
    std::size_t dense_w = 0, dense_b = 0;
    std::size_t total = 0;
};

class Model {
public:
    /// All-zero parameters.
    explicit Model(ModelShape shape);
    Model(ModelShape shape, Eigen::VectorXd parameters);

    /// Uniform init in +-1/sqrt(fan_in): width*F for the conv block, H for the
    /// LSTM and dense blocks.
    static Model initialize(const ModelShape& shape, std::uint64_t seed);

    const ModelShape& shape() const noexcept { return shape_; }
    const ParamLayout& layout() const noexcept { return layout_; }
    const Eigen::VectorXd& parameters() const noexcept { return params_; }
    Eigen::VectorXd& parameters() noexcept { return params_; }

    using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
    using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
    ConstMatrixMap conv_kernel() const;
    ConstVectorMap conv_bias() const;
    ConstMatrixMap lstm_w() const;
    ConstMatrixMap lstm_u() const;
    ConstVectorMap lstm_b() const;
    ConstVectorMap dense_w() const;
    double dense_b() const;

private:
    ModelShape shape_;
    ParamLayout layout_;
    Eigen::VectorXd params_;
};

/// Time-major batch: steps[t] is features x batch.
struct SequenceBatch {
    std::vector<Eigen::MatrixXd> steps;
    Eigen::Index batch() const noexcept { return steps.empty() ? 0 : steps.front().cols(); }
};

SequenceBatch make_batch(const WindowedDataset& ds, std::span<const std::size_t> indices);
/// A single lookback x F window as a batch of one.
SequenceBatch make_batch(const Eigen::MatrixXd& window);

/// Activations kept for the backward pass.
struct ForwardCache {
    // LSTM, per step
    std::vector<Eigen::MatrixXd> inputs;  ///< In x B (pooled conv output for cnn_lstm)
    std::vector<Eigen::MatrixXd> gate_i, gate_f, gate_g, gate_o, cell, cell_tanh, hidden;
    // CNN, per conv position
    std::vector<Eigen::MatrixXd> conv_stack; ///< (width*F) x B stacked input taps
    std::vector<Eigen::MatrixXd> conv_pre;   ///< K x B before ReLU
    std::vector<Eigen::MatrixXi> pool_pick;  ///< K x B: 0 or 1, which of the two pooled positions won
};

struct ForwardResult {
    Eigen::RowVectorXd prediction; ///< one per batch column
    ForwardCache cache;
};

/// Generic forward pass for either architecture.
ForwardResult forward(const Model& model, const SequenceBatch& batch);

/// LSTM only; throws std::invalid_argument for a cnn_lstm model or mismatched shapes.
ForwardResult lstm_forward(const Model& model, const SequenceBatch& batch);
/// CNN-LSTM only.
ForwardResult cnn_lstm_forward(const Model& model, const SequenceBatch& batch);

struct LossAndGradient {
    double loss = 0.0; ///< mean squared error over the batch
    Eigen::VectorXd gradient;
};

LossAndGradient loss_and_gradient(const Model& model, const SequenceBatch& batch, const Eigen::VectorXd& targets);
double batch_loss(const Model& model, const SequenceBatch& batch, const Eigen::VectorXd& targets);

struct AdamState {
    Eigen::VectorXd m, v;
    long step = 0;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
};

/// One optimizer step on the batch. Returns the pre-update batch loss; throws
/// DivergenceError (epoch -1) on a non-finite loss.
double backward_and_step(Model& model, const SequenceBatch& batch, const Eigen::VectorXd& targets, AdamState& opt,
                         double learning_rate);

struct TrainConfig {
    int epochs = 100;
    int runs = 30;
    double learning_rate = 1e-3;
    int batch_size = 32;
    std::uint64_t seed = 0;
    int hidden = 32;
    int kernels = 16;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
    int max_parallelism = 1;

    void validate() const;
};

struct TrainResult {
    Model model;
    std::vector<double> loss_curve; ///< mean training MSE per epoch
};

/// Seeded init, per-epoch shuffle from the same generator, Adam updates.
/// Throws DivergenceError naming the epoch on a non-finite loss.
TrainResult train(Architecture arch, const WindowedDataset& train_split, const TrainConfig& cfg);

/// One prediction per sample in `ds`, in order (scaled units).
Eigen::VectorXd predict(const Model& model, const WindowedDataset& ds);

// Binary model format: "IDXF", u16 version, u16 architecture, u32 H, F, K,
// kernel width, pool, u64 parameter count, then the flat parameter vector as
// little-endian IEEE-754 doubles.
inline constexpr std::uint16_t kModelFormatVersion = 1;
std::string serialize_model(const Model& model);
Model deserialize_model(std::string_view bytes);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

} // namespace idxf
