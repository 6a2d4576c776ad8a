#include "das/hdlnet/training.hpp"

#include "das/common.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace das::hdl {
namespace {

// Fisher-Yates with a platform-independent index draw.
void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace

void TrainConfig::validate() const
{
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(lambda_l1 >= 0.0)) throw ConfigError("lambda_l1 must be non-negative");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation_fraction must be in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("adam betas must be in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
}

AdamState make_adam_state(const ModelParams& params)
{
    return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(ModelParams& params, const ModelParams& grads, const TrainConfig& c,
               std::size_t step_index, AdamState& state)
{
    if (!params.same_layout(grads) || !params.same_layout(state.m))
        throw ConfigError("adam: parameter and gradient layouts differ");
    if (step_index < 1) throw ConfigError("adam: step_index is 1-based");
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step_index));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step_index));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params.tensor(k).span();
        const auto g = grads.tensor(k).span();
        auto m = state.m.tensor(k).span();
        auto v = state.v.tensor(k).span();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            p[i] -= c.learning_rate * mh / (std::sqrt(vh) + c.epsilon);
        }
    }
    state.step = step_index;
}

TrainResult train(const std::vector<Tensor>& dataset, const physics::ImpulseKernel& kernel,
                  const NetConfig& net_config, const TrainConfig& config,
                  const ModelParams* initial, const EpochCallback& on_epoch)
{
    config.validate();
    if (dataset.empty()) throw ConfigError("training dataset is empty");
    const HdlNet net(net_config);
    for (const Tensor& y : dataset) {
        if (y.rank() != 2 || y.dim(0) != net_config.input_channels
            || y.dim(1) != net_config.input_time)
            throw ConfigError("training sample " + y.shape_string() + " does not match the net input");
        for (double v : y.span())
            if (!(v >= 0.0 && v <= 1.0))
                throw ConfigError("training samples must be normalized to [0, 1]");
    }

    std::mt19937_64 rng(config.seed);
    TrainResult result;
    if (initial) {
        if (!net.compatible(*initial)) throw ConfigError("initial parameters do not match the net");
        result.params = *initial;
    } else {
        result.params = net.init_params(rng);
    }

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    const auto n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(dataset.size()) * config.validation_fraction));
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<long>(n_val));
    std::vector<std::size_t> tr(order.begin() + static_cast<long>(n_val), order.end());
    if (tr.empty()) throw ConfigError("training split is empty");
    result.train_count = tr.size();
    result.validation_count = val.size();

    std::vector<Tensor> val_set;
    for (std::size_t i : val) val_set.push_back(dataset[i]);

    AdamState adam = make_adam_state(result.params);
    ModelParams grads;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(tr, rng);
        double weighted = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < tr.size(); start += config.batch_size, ++batch_no) {
            const std::size_t end = std::min(tr.size(), start + config.batch_size);
            std::vector<Tensor> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(dataset[tr[i]]);
            double l = 0.0;
            try {
                l = gradients(net, result.params, batch, kernel, config.lambda_l1, grads,
                              config.threads);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch)
                                   + ", batch " + std::to_string(batch_no) + ")");
            }
            if (!std::isfinite(l))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch "
                                   + std::to_string(batch_no));
            weighted += l * static_cast<double>(batch.size());
            adam_step(result.params, grads, config, adam.step + 1, adam);
        }
        EpochStats s;
        s.epoch = epoch;
        s.train_loss = weighted / static_cast<double>(tr.size());
        s.validation_loss = val_set.empty()
            ? std::numeric_limits<double>::quiet_NaN()
            : loss(net, result.params, val_set, kernel, config.lambda_l1);
        if (!val_set.empty() && !std::isfinite(s.validation_loss))
            throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
        result.history.push_back(s);
        if (on_epoch) on_epoch(s);
    }
    return result;
}

Tensor to_tensor(const Waterfall& w)
{
    Tensor t({w.n_channels(), w.n_time()});
    const auto v = w.values();
    std::copy(v.begin(), v.end(), t.data());
    return t;
}

Waterfall to_waterfall(const Tensor& t, double channel_spacing, double sample_rate)
{
    if (t.rank() != 2) throw ConfigError("to_waterfall: expected rank 2, got " + t.shape_string());
    Waterfall w(t.dim(0), t.dim(1), channel_spacing, sample_rate);
    for (std::size_t c = 0; c < t.dim(0); ++c)
        for (std::size_t k = 0; k < t.dim(1); ++k) w(c, k) = t[c * t.dim(1) + k];
    return w;
}

std::vector<std::size_t> tile_origins(std::size_t n, std::size_t tile)
{
    if (tile == 0 || n < tile)
        throw ConfigError("cannot tile length " + std::to_string(n) + " with tiles of "
                          + std::to_string(tile));
    std::vector<std::size_t> out;
    for (std::size_t o = 0; o + tile <= n; o += tile) out.push_back(o);
    if (n % tile != 0) out.push_back(n - tile);
    return out;
}

std::vector<Tensor> make_tiles(const Waterfall& w, std::size_t tile_channels, std::size_t tile_time)
{
    std::vector<Tensor> tiles;
    for (std::size_t c0 : tile_origins(w.n_channels(), tile_channels))
        for (std::size_t t0 : tile_origins(w.n_time(), tile_time)) {
            Tensor t({tile_channels, tile_time});
            for (std::size_t c = 0; c < tile_channels; ++c)
                for (std::size_t k = 0; k < tile_time; ++k) t[c * tile_time + k] = w(c0 + c, t0 + k);
            tiles.push_back(std::move(t));
        }
    return tiles;
}

NetDenoiseResult denoise(const HdlNet& net, const ModelParams& params, const Waterfall& w,
                         const physics::ImpulseKernel& kernel, std::size_t threads)
{
    const NetConfig& c = net.config();
    if (!w.all_finite()) throw NumericError("input waterfall has non-finite values");
    if (kernel.taps.size() > c.input_channels)
        throw ConfigError("kernel is longer than the net's channel extent");
    const auto rows = tile_origins(w.n_channels(), c.input_channels);
    const auto cols = tile_origins(w.n_time(), c.input_time);
    const SensorAxisConv conv(kernel, c.input_channels);

    std::vector<Tensor> est(rows.size() * cols.size()), rec(rows.size() * cols.size());
    parallel_for(est.size(), threads, [&](std::size_t i) {
        const std::size_t c0 = rows[i / cols.size()], t0 = cols[i % cols.size()];
        Tensor y({c.input_channels, c.input_time});
        for (std::size_t a = 0; a < c.input_channels; ++a)
            for (std::size_t k = 0; k < c.input_time; ++k) y[a * c.input_time + k] = w(c0 + a, t0 + k);
        est[i] = net.forward(params, y);
        rec[i] = conv.apply(est[i]);
    });

    NetDenoiseResult out{Waterfall(w.n_channels(), w.n_time(), w.channel_spacing, w.sample_rate),
                         Waterfall(w.n_channels(), w.n_time(), w.channel_spacing, w.sample_rate)};
    for (std::size_t i = 0; i < est.size(); ++i) {
        const std::size_t c0 = rows[i / cols.size()], t0 = cols[i % cols.size()];
        for (std::size_t a = 0; a < c.input_channels; ++a)
            for (std::size_t k = 0; k < c.input_time; ++k) {
                out.estimate(c0 + a, t0 + k) = est[i][a * c.input_time + k];
                out.reconstruction(c0 + a, t0 + k) = rec[i][a * c.input_time + k];
            }
    }
    return out;
}

} // namespace das::hdl
