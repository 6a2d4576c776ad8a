#pragma once

#include "das/hdlnet/layers.hpp"
#include "das/hdlnet/lstm.hpp"
#include "das/hdlnet/tensor.hpp"
#include "das/physics.hpp"
#include "das/spectral.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace das::hdl {

/// Which axis of the [Nd, Nt] map the LSTM steps along.
enum class LstmAxis : std::uint8_t {
    Channel = 0, ///< Nd steps of length-Nt features
    Time = 1,    ///< Nt steps of length-Nd features
};

struct NetConfig {
    std::size_t input_channels = 16; ///< Nd
    std::size_t input_time = 32;     ///< Nt
    std::size_t base_channels = 2;
    std::size_t depth = 2;
    std::size_t conv_h = 3;
    std::size_t conv_w = 5;
    std::size_t pool_h = 2;
    std::size_t pool_w = 4;
    std::size_t lstm_units = 4;
    std::size_t dense_width = 32; ///< must equal the per-step feature length
    LstmAxis lstm_axis = LstmAxis::Channel;

    /// 360x1024 input, base 8, depth 3, 128 LSTM units, dense 1024.
    static NetConfig full_scale();
    /// 16x32 input, base 2, depth 2, 4 LSTM units.
    static NetConfig toy();

    void validate() const;
    std::size_t sequence_length() const;
    std::size_t feature_length() const;
    bool operator==(const NetConfig&) const = default;
};

struct MapShape {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
};

/// Everything a backward pass needs from the forward pass of one sample.
struct ForwardCache {
    Tensor input;                 ///< [1, Nd, Nt]
    std::vector<Tensor> enc_in;   ///< input of encoder conv d
    std::vector<Tensor> enc_out;  ///< post-ReLU encoder conv d (skip connection)
    std::vector<PoolResult> pools;
    Tensor bottleneck_out;
    std::vector<Tensor> up_in;    ///< input of the transposed conv at level d
    std::vector<Tensor> cat;      ///< concatenation fed to decoder conv d
    std::vector<Tensor> dec_out;  ///< post-ReLU decoder conv d
    Tensor unet_out;              ///< [1, Nd, Nt] post-ReLU
    LstmCache lstm;
};

/// Throws NumericError naming `layer` if t has a NaN or infinity.
void check_finite(const Tensor& t, const std::string& layer);

class HdlNet {
public:
    explicit HdlNet(const NetConfig& config);

    const NetConfig& config() const { return config_; }

    /// Glorot-uniform weights, zero biases, forget-gate bias 1.
    ModelParams init_params(std::mt19937_64& rng) const;
    ModelParams zero_params() const;
    bool compatible(const ModelParams& params) const;

    /// Input and output are [Nd, Nt].
    Tensor unet_forward(const ModelParams& params, const Tensor& x) const;
    Tensor lstm_forward(const ModelParams& params, const Tensor& x) const;
    Tensor forward(const ModelParams& params, const Tensor& y) const;
    Tensor forward(const ModelParams& params, const Tensor& y, ForwardCache& cache) const;

    /// Accumulates d(output)/d(params) contracted with d_out into grads.
    void backward(const ModelParams& params, const ForwardCache& cache, const Tensor& d_out,
                  ModelParams& grads) const;

    /// Feature map shape at the output of encoder level d (before pooling).
    MapShape encoder_shape(std::size_t level) const;
    MapShape bottleneck_shape() const;
    /// One line per layer: name and output shape.
    std::vector<std::string> describe() const;

private:
    Tensor run(const ModelParams& params, const Tensor& y, ForwardCache* cache) const;
    Tensor run_lstm(const ModelParams& params, const Tensor& x, LstmCache* cache) const;
    LstmWeights lstm_weights(const ModelParams& params) const;

    NetConfig config_;
    ModelParams layout_;
    std::vector<std::size_t> enc_w_, enc_b_, up_w_, up_b_, dec_w_, dec_b_;
    std::size_t bott_w_ = 0, bott_b_ = 0, out_w_ = 0, out_b_ = 0;
    std::size_t lstm_w_ = 0, lstm_u_ = 0, lstm_b_ = 0, dense_w_ = 0, dense_b_ = 0;
};

/// 'same' convolution of every time column of an [Nd, Nt] map with a fixed
/// sensor-axis kernel, and its adjoint.
class SensorAxisConv {
public:
    SensorAxisConv(const physics::ImpulseKernel& kernel, std::size_t n_channels);
    Tensor apply(const Tensor& x) const;
    Tensor adjoint(const Tensor& r) const;

private:
    spectral::SameConvolver op_;
};

/// Per-sample terms of the self-supervised loss.
struct SampleLoss {
    double data_fit = 0.0; ///< ||K*X - Y||^2
    double l1 = 0.0;       ///< ||X||_1
};

/// (1/Nb) sum_i ||K*X_i - Y_i||^2 + lambda ||X_i||_1 with X_i = forward(Y_i).
double loss(const HdlNet& net, const ModelParams& params, std::span<const Tensor> batch,
            const physics::ImpulseKernel& kernel, double lambda_l1);

/// Loss and its exact gradient. grads is overwritten. Per-sample work is
/// split into fixed chunks whose partial sums are reduced in chunk order, so
/// the result does not depend on `threads`.
double gradients(const HdlNet& net, const ModelParams& params, std::span<const Tensor> batch,
                 const physics::ImpulseKernel& kernel, double lambda_l1, ModelParams& grads,
                 std::size_t threads = 1);

} // namespace das::hdl
