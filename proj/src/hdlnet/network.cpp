#include "das/hdlnet/network.hpp"

#include "das/common.hpp"

#include <cmath>

namespace das::hdl {
namespace {

constexpr std::size_t kChunk = 8;

std::size_t ipow(std::size_t b, std::size_t e)
{
    std::size_t r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= b;
    return r;
}

// Uniform in [-limit, limit) from the top 53 bits, identical on every platform.
double uniform(std::mt19937_64& rng, double limit)
{
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * limit;
}

void glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : t.span()) v = uniform(rng, limit);
}

Tensor as_map(const Tensor& x)
{
    Tensor m({1, x.dim(0), x.dim(1)});
    std::copy(x.data(), x.data() + x.size(), m.data());
    return m;
}

Tensor as_matrix(const Tensor& m)
{
    Tensor x({m.dim(1), m.dim(2)});
    std::copy(m.data(), m.data() + m.size(), x.data());
    return x;
}

} // namespace

NetConfig NetConfig::full_scale()
{
    NetConfig c;
    c.input_channels = 360;
    c.input_time = 1024;
    c.base_channels = 8;
    c.depth = 3;
    c.lstm_units = 128;
    c.dense_width = 1024;
    return c;
}

NetConfig NetConfig::toy() { return NetConfig{}; }

void NetConfig::validate() const
{
    if (input_channels == 0 || input_time == 0) throw ConfigError("net input size must be positive");
    if (base_channels == 0) throw ConfigError("base_channels must be positive");
    if (lstm_units == 0) throw ConfigError("lstm_units must be positive");
    if (conv_h % 2 == 0 || conv_w % 2 == 0) throw ConfigError("conv kernel sizes must be odd");
    if (pool_h == 0 || pool_w == 0) throw ConfigError("pool sizes must be positive");
    const std::size_t dh = ipow(pool_h, depth), dw = ipow(pool_w, depth);
    if (input_channels % dh != 0)
        throw ConfigError("input_channels " + std::to_string(input_channels)
                          + " is not divisible by pool_h^depth = " + std::to_string(dh));
    if (input_time % dw != 0)
        throw ConfigError("input_time " + std::to_string(input_time)
                          + " is not divisible by pool_w^depth = " + std::to_string(dw));
    if (dense_width != feature_length())
        throw ConfigError("dense_width " + std::to_string(dense_width)
                          + " must equal the LSTM feature length " + std::to_string(feature_length()));
}

std::size_t NetConfig::sequence_length() const
{
    return lstm_axis == LstmAxis::Channel ? input_channels : input_time;
}

std::size_t NetConfig::feature_length() const
{
    return lstm_axis == LstmAxis::Channel ? input_time : input_channels;
}

void check_finite(const Tensor& t, const std::string& layer)
{
    if (!t.all_finite()) throw NumericError("non-finite values at layer " + layer);
}

HdlNet::HdlNet(const NetConfig& config) : config_(config)
{
    config_.validate();
    const auto& c = config_;
    const std::size_t kh = c.conv_h, kw = c.conv_w;
    std::size_t in_ch = 1;
    for (std::size_t d = 0; d < c.depth; ++d) {
        const std::size_t ch = c.base_channels << d;
        const std::string p = "enc" + std::to_string(d) + ".conv.";
        enc_w_.push_back(layout_.add(p + "w", Tensor({ch, in_ch, kh, kw})));
        enc_b_.push_back(layout_.add(p + "b", Tensor({ch})));
        in_ch = ch;
    }
    const std::size_t bott_ch = c.base_channels << c.depth;
    bott_w_ = layout_.add("bottleneck.conv.w", Tensor({bott_ch, in_ch, kh, kw}));
    bott_b_ = layout_.add("bottleneck.conv.b", Tensor({bott_ch}));
    up_w_.assign(c.depth, 0);
    up_b_.assign(c.depth, 0);
    dec_w_.assign(c.depth, 0);
    dec_b_.assign(c.depth, 0);
    std::size_t from = bott_ch;
    for (std::size_t d = c.depth; d-- > 0;) {
        const std::size_t ch = c.base_channels << d;
        const std::string p = "dec" + std::to_string(d) + ".";
        up_w_[d] = layout_.add(p + "up.w", Tensor({from, ch, c.pool_h, c.pool_w}));
        up_b_[d] = layout_.add(p + "up.b", Tensor({ch}));
        dec_w_[d] = layout_.add(p + "conv.w", Tensor({ch, 2 * ch, kh, kw}));
        dec_b_[d] = layout_.add(p + "conv.b", Tensor({ch}));
        from = ch;
    }
    out_w_ = layout_.add("out.conv.w", Tensor({1, from, kh, kw}));
    out_b_ = layout_.add("out.conv.b", Tensor({1}));
    const std::size_t h = c.lstm_units, f = c.feature_length();
    lstm_w_ = layout_.add("lstm.w", Tensor({4 * h, f}));
    lstm_u_ = layout_.add("lstm.u", Tensor({4 * h, h}));
    lstm_b_ = layout_.add("lstm.b", Tensor({4 * h}));
    dense_w_ = layout_.add("dense.w", Tensor({c.dense_width, h}));
    dense_b_ = layout_.add("dense.b", Tensor({c.dense_width}));
}

ModelParams HdlNet::zero_params() const { return layout_.zeros_like(); }

bool HdlNet::compatible(const ModelParams& params) const { return layout_.same_layout(params); }

ModelParams HdlNet::init_params(std::mt19937_64& rng) const
{
    ModelParams p = zero_params();
    const std::size_t area = config_.conv_h * config_.conv_w;
    auto conv = [&](std::size_t idx) {
        Tensor& w = p.tensor(idx);
        glorot(w, w.dim(1) * area, w.dim(0) * area, rng);
    };
    for (std::size_t d = 0; d < config_.depth; ++d) conv(enc_w_[d]);
    conv(bott_w_);
    for (std::size_t d = config_.depth; d-- > 0;) {
        Tensor& up = p.tensor(up_w_[d]);
        const std::size_t a = config_.pool_h * config_.pool_w;
        glorot(up, up.dim(0) * a, up.dim(1) * a, rng);
        conv(dec_w_[d]);
    }
    conv(out_w_);
    const std::size_t h = config_.lstm_units;
    glorot(p.tensor(lstm_w_), config_.feature_length(), 4 * h, rng);
    glorot(p.tensor(lstm_u_), h, 4 * h, rng);
    Tensor& b = p.tensor(lstm_b_);
    for (std::size_t k = h; k < 2 * h; ++k) b[k] = 1.0;
    glorot(p.tensor(dense_w_), h, config_.dense_width, rng);
    return p;
}

MapShape HdlNet::encoder_shape(std::size_t level) const
{
    return {config_.base_channels << level, config_.input_channels / ipow(config_.pool_h, level),
            config_.input_time / ipow(config_.pool_w, level)};
}

MapShape HdlNet::bottleneck_shape() const
{
    return {config_.base_channels << config_.depth,
            config_.input_channels / ipow(config_.pool_h, config_.depth),
            config_.input_time / ipow(config_.pool_w, config_.depth)};
}

std::vector<std::string> HdlNet::describe() const
{
    auto fmt = [](const MapShape& s) {
        return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x"
            + std::to_string(s.width);
    };
    std::vector<std::string> out;
    out.push_back("input 1x" + std::to_string(config_.input_channels) + "x"
                  + std::to_string(config_.input_time));
    for (std::size_t d = 0; d < config_.depth; ++d) {
        out.push_back("enc" + std::to_string(d) + ".conv " + fmt(encoder_shape(d)));
        MapShape pooled = encoder_shape(d + 1);
        pooled.channels = encoder_shape(d).channels;
        out.push_back("enc" + std::to_string(d) + ".pool " + fmt(pooled));
    }
    out.push_back("bottleneck.conv " + fmt(bottleneck_shape()));
    for (std::size_t d = config_.depth; d-- > 0;) {
        out.push_back("dec" + std::to_string(d) + ".up " + fmt(encoder_shape(d)));
        MapShape cat = encoder_shape(d);
        cat.channels *= 2;
        out.push_back("dec" + std::to_string(d) + ".concat " + fmt(cat));
        out.push_back("dec" + std::to_string(d) + ".conv " + fmt(encoder_shape(d)));
    }
    out.push_back("out.conv 1x" + std::to_string(config_.input_channels) + "x"
                  + std::to_string(config_.input_time));
    out.push_back("lstm " + std::to_string(config_.sequence_length()) + "x"
                  + std::to_string(config_.lstm_units));
    out.push_back("dense " + std::to_string(config_.sequence_length()) + "x"
                  + std::to_string(config_.dense_width));
    out.push_back("output " + std::to_string(config_.input_channels) + "x"
                  + std::to_string(config_.input_time));
    return out;
}

LstmWeights HdlNet::lstm_weights(const ModelParams& p) const
{
    return {&p.tensor(lstm_w_), &p.tensor(lstm_u_), &p.tensor(lstm_b_), &p.tensor(dense_w_),
            &p.tensor(dense_b_)};
}

Tensor HdlNet::run_lstm(const ModelParams& params, const Tensor& x, LstmCache* cache) const
{
    const bool by_time = config_.lstm_axis == LstmAxis::Time;
    Tensor seq = by_time ? transpose2d(x) : x;
    Tensor out = lstm_dense_forward(seq, lstm_weights(params), cache);
    check_finite(out, "lstm+dense");
    return by_time ? transpose2d(out) : out;
}

Tensor HdlNet::run(const ModelParams& params, const Tensor& y, ForwardCache* cache) const
{
    if (!compatible(params)) throw ConfigError("parameters do not match the network layout");
    if (y.rank() != 2 || y.dim(0) != config_.input_channels || y.dim(1) != config_.input_time)
        throw ConfigError("net input must be " + std::to_string(config_.input_channels) + "x"
                          + std::to_string(config_.input_time) + ", got " + y.shape_string());
    const std::size_t depth = config_.depth;
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.enc_in.assign(depth, {});
    c.enc_out.assign(depth, {});
    c.pools.assign(depth, {});
    c.up_in.assign(depth, {});
    c.cat.assign(depth, {});
    c.dec_out.assign(depth, {});
    c.input = as_map(y);

    Tensor cur = c.input;
    for (std::size_t d = 0; d < depth; ++d) {
        const std::string name = "enc" + std::to_string(d);
        c.enc_in[d] = std::move(cur);
        Tensor h = conv2d_same(c.enc_in[d], params.tensor(enc_w_[d]), params.tensor(enc_b_[d]));
        relu_inplace(h);
        check_finite(h, name + ".conv");
        c.enc_out[d] = std::move(h);
        c.pools[d] = max_pool(c.enc_out[d], config_.pool_h, config_.pool_w);
        cur = c.pools[d].out;
    }
    {
        Tensor h = conv2d_same(cur, params.tensor(bott_w_), params.tensor(bott_b_));
        relu_inplace(h);
        check_finite(h, "bottleneck.conv");
        c.bottleneck_out = std::move(h);
    }
    cur = c.bottleneck_out;
    for (std::size_t d = depth; d-- > 0;) {
        const std::string name = "dec" + std::to_string(d);
        c.up_in[d] = std::move(cur);
        Tensor up = conv_transpose(c.up_in[d], params.tensor(up_w_[d]), params.tensor(up_b_[d]));
        check_finite(up, name + ".up");
        c.cat[d] = concat_channels(up, c.enc_out[d]);
        Tensor h = conv2d_same(c.cat[d], params.tensor(dec_w_[d]), params.tensor(dec_b_[d]));
        relu_inplace(h);
        check_finite(h, name + ".conv");
        c.dec_out[d] = h;
        cur = std::move(h);
    }
    Tensor out = conv2d_same(cur, params.tensor(out_w_), params.tensor(out_b_));
    relu_inplace(out);
    check_finite(out, "out.conv");
    c.unet_out = out;
    return run_lstm(params, as_matrix(out), cache ? &c.lstm : nullptr);
}

Tensor HdlNet::unet_forward(const ModelParams& params, const Tensor& x) const
{
    ForwardCache cache;
    run(params, x, &cache);
    return as_matrix(cache.unet_out);
}

Tensor HdlNet::lstm_forward(const ModelParams& params, const Tensor& x) const
{
    if (!compatible(params)) throw ConfigError("parameters do not match the network layout");
    if (x.rank() != 2 || x.dim(0) != config_.input_channels || x.dim(1) != config_.input_time)
        throw ConfigError("lstm input shape mismatch: " + x.shape_string());
    return run_lstm(params, x, nullptr);
}

Tensor HdlNet::forward(const ModelParams& params, const Tensor& y) const
{
    return run(params, y, nullptr);
}

Tensor HdlNet::forward(const ModelParams& params, const Tensor& y, ForwardCache& cache) const
{
    return run(params, y, &cache);
}

void HdlNet::backward(const ModelParams& params, const ForwardCache& c, const Tensor& d_out,
                      ModelParams& g) const
{
    const bool by_time = config_.lstm_axis == LstmAxis::Time;
    const LstmGrads lg{&g.tensor(lstm_w_), &g.tensor(lstm_u_), &g.tensor(lstm_b_),
                       &g.tensor(dense_w_), &g.tensor(dense_b_)};
    Tensor d_seq = lstm_dense_backward(c.lstm, lstm_weights(params),
                                       by_time ? transpose2d(d_out) : d_out, lg);
    if (by_time) d_seq = transpose2d(d_seq);
    check_finite(d_seq, "lstm+dense (backward)");

    Tensor d = as_map(d_seq);
    relu_backward_inplace(c.unet_out, d);
    const Tensor& last = config_.depth > 0 ? c.dec_out[0] : c.bottleneck_out;
    d = conv2d_same_backward(last, params.tensor(out_w_), d, g.tensor(out_w_), g.tensor(out_b_));
    check_finite(d, "out.conv (backward)");

    std::vector<Tensor> d_skip(config_.depth);
    for (std::size_t lv = 0; lv < config_.depth; ++lv) {
        const std::string name = "dec" + std::to_string(lv);
        relu_backward_inplace(c.dec_out[lv], d);
        Tensor d_cat = conv2d_same_backward(c.cat[lv], params.tensor(dec_w_[lv]), d,
                                            g.tensor(dec_w_[lv]), g.tensor(dec_b_[lv]));
        Tensor d_up;
        split_channels(d_cat, c.cat[lv].dim(0) / 2, d_up, d_skip[lv]);
        d = conv_transpose_backward(c.up_in[lv], params.tensor(up_w_[lv]), d_up,
                                    g.tensor(up_w_[lv]), g.tensor(up_b_[lv]));
        check_finite(d, name + " (backward)");
    }
    // d now holds the gradient at the bottleneck output.
    relu_backward_inplace(c.bottleneck_out, d);
    const Tensor& bott_in = config_.depth > 0 ? c.pools[config_.depth - 1].out : c.input;
    d = conv2d_same_backward(bott_in, params.tensor(bott_w_), d, g.tensor(bott_w_),
                             g.tensor(bott_b_));
    check_finite(d, "bottleneck.conv (backward)");

    for (std::size_t lv = config_.depth; lv-- > 0;) {
        const std::string name = "enc" + std::to_string(lv);
        Tensor d_enc = max_pool_backward(c.pools[lv], c.enc_out[lv].shape(), d);
        for (std::size_t i = 0; i < d_enc.size(); ++i) d_enc[i] += d_skip[lv][i];
        relu_backward_inplace(c.enc_out[lv], d_enc);
        d = conv2d_same_backward(c.enc_in[lv], params.tensor(enc_w_[lv]), d_enc,
                                 g.tensor(enc_w_[lv]), g.tensor(enc_b_[lv]));
        check_finite(d, name + " (backward)");
    }
}

SensorAxisConv::SensorAxisConv(const physics::ImpulseKernel& kernel, std::size_t n_channels)
    : op_(kernel.taps, n_channels)
{
}

Tensor SensorAxisConv::apply(const Tensor& x) const
{
    const std::size_t nd = x.dim(0), nt = x.dim(1);
    Tensor out({nd, nt});
    std::vector<double> col(nd), res(nd);
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t i = 0; i < nd; ++i) col[i] = x[i * nt + t];
        op_.apply(col, res);
        for (std::size_t i = 0; i < nd; ++i) out[i * nt + t] = res[i];
    }
    return out;
}

Tensor SensorAxisConv::adjoint(const Tensor& r) const
{
    const std::size_t nd = r.dim(0), nt = r.dim(1);
    Tensor out({nd, nt});
    std::vector<double> col(nd), res(nd);
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t i = 0; i < nd; ++i) col[i] = r[i * nt + t];
        op_.adjoint(col, res);
        for (std::size_t i = 0; i < nd; ++i) out[i * nt + t] = res[i];
    }
    return out;
}

namespace {

void require_kernel_fits(const physics::ImpulseKernel& kernel, const NetConfig& c)
{
    if (kernel.taps.empty() || kernel.taps.size() % 2 == 0)
        throw ConfigError("kernel must have an odd, nonzero number of taps");
    if (kernel.taps.size() > c.input_channels)
        throw ConfigError("kernel has " + std::to_string(kernel.taps.size())
                          + " taps but the net input has only "
                          + std::to_string(c.input_channels) + " channels");
}

SampleLoss sample_terms(const Tensor& x, const Tensor& y, const SensorAxisConv& conv,
                        Tensor* residual)
{
    Tensor r = conv.apply(x);
    SampleLoss s;
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] -= y[i];
        s.data_fit += r[i] * r[i];
        s.l1 += std::abs(x[i]);
    }
    if (residual) *residual = std::move(r);
    return s;
}

} // namespace

double loss(const HdlNet& net, const ModelParams& params, std::span<const Tensor> batch,
            const physics::ImpulseKernel& kernel, double lambda_l1)
{
    if (batch.empty()) throw ConfigError("loss needs a nonempty batch");
    require_kernel_fits(kernel, net.config());
    const SensorAxisConv conv(kernel, net.config().input_channels);
    double total = 0.0;
    for (const Tensor& y : batch) {
        const SampleLoss s = sample_terms(net.forward(params, y), y, conv, nullptr);
        total += s.data_fit + lambda_l1 * s.l1;
    }
    return total / static_cast<double>(batch.size());
}

double gradients(const HdlNet& net, const ModelParams& params, std::span<const Tensor> batch,
                 const physics::ImpulseKernel& kernel, double lambda_l1, ModelParams& grads,
                 std::size_t threads)
{
    if (batch.empty()) throw ConfigError("gradients need a nonempty batch");
    require_kernel_fits(kernel, net.config());
    const SensorAxisConv conv(kernel, net.config().input_channels);
    const double inv_nb = 1.0 / static_cast<double>(batch.size());
    const std::size_t n_chunks = (batch.size() + kChunk - 1) / kChunk;

    std::vector<ModelParams> partial(n_chunks);
    std::vector<double> partial_loss(n_chunks, 0.0);
    parallel_for(n_chunks, threads, [&](std::size_t k) {
        ModelParams g = params.zeros_like();
        double lsum = 0.0;
        const std::size_t end = std::min(batch.size(), (k + 1) * kChunk);
        for (std::size_t i = k * kChunk; i < end; ++i) {
            ForwardCache cache;
            const Tensor x = net.forward(params, batch[i], cache);
            Tensor r;
            const SampleLoss s = sample_terms(x, batch[i], conv, &r);
            lsum += s.data_fit + lambda_l1 * s.l1;
            Tensor dx = conv.adjoint(r);
            for (std::size_t j = 0; j < dx.size(); ++j) {
                const double sign = x[j] > 0.0 ? 1.0 : (x[j] < 0.0 ? -1.0 : 0.0);
                dx[j] = (2.0 * dx[j] + lambda_l1 * sign) * inv_nb;
            }
            net.backward(params, cache, dx, g);
        }
        partial[k] = std::move(g);
        partial_loss[k] = lsum;
    });

    grads = params.zeros_like();
    double total = 0.0;
    for (std::size_t k = 0; k < n_chunks; ++k) {
        grads.accumulate(partial[k]);
        total += partial_loss[k];
    }
    for (const auto& t : grads)
        if (!t.value.all_finite()) throw NumericError("non-finite gradient for " + t.name);
    return total * inv_nb;
}

} // namespace das::hdl
