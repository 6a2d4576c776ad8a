#pragma once

#include "das/hdlnet/network.hpp"
#include "das/waterfall.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace das::hdl {

struct TrainConfig {
    double learning_rate = 5e-4;
    std::size_t batch_size = 128;
    std::size_t epochs = 10;
    double lambda_l1 = 1e-3;
    /// Noise variance of the measurement model. It scales the data term and
    /// the regularizer alike, so it is recorded but does not enter the loss.
    double noise_variance = 0.01;
    std::uint64_t seed = 7;
    double validation_fraction = 0.2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t threads = 1;

    void validate() const;
};

struct AdamState {
    ModelParams m;
    ModelParams v;
    std::size_t step = 0; ///< number of updates applied so far
};

AdamState make_adam_state(const ModelParams& params);

/// One bias-corrected Adam update. step_index is 1-based.
void adam_step(ModelParams& params, const ModelParams& grads, const TrainConfig& config,
               std::size_t step_index, AdamState& state);

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;      ///< mean sample loss over the epoch's batches
    double validation_loss = 0.0; ///< NaN if the validation split is empty
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> history;
    std::size_t train_count = 0;
    std::size_t validation_count = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Self-supervised training on normalized samples of the net's input size.
/// The seed drives initialization (unless `initial` is given), the 80/20
/// split, and the per-epoch batch order.
TrainResult train(const std::vector<Tensor>& dataset, const physics::ImpulseKernel& kernel,
                  const NetConfig& net_config, const TrainConfig& config,
                  const ModelParams* initial = nullptr, const EpochCallback& on_epoch = {});

Tensor to_tensor(const Waterfall& w);
Waterfall to_waterfall(const Tensor& t, double channel_spacing, double sample_rate);

/// Tile origins covering [0, n) with tiles of length `tile`: multiples of
/// `tile`, plus a final origin at n - tile when n is not a multiple.
std::vector<std::size_t> tile_origins(std::size_t n, std::size_t tile);

/// Cuts w into net-sized tiles.
std::vector<Tensor> make_tiles(const Waterfall& w, std::size_t tile_channels,
                               std::size_t tile_time);

struct NetDenoiseResult {
    Waterfall estimate;       ///< network output X
    Waterfall reconstruction; ///< K * X along the sensor axis
};

/// Runs the net tile by tile over a normalized waterfall. Where edge tiles
/// overlap, the later tile wins.
NetDenoiseResult denoise(const HdlNet& net, const ModelParams& params, const Waterfall& w,
                         const physics::ImpulseKernel& kernel, std::size_t threads = 1);

} // namespace das::hdl
