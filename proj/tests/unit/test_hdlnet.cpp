#include "doctest.h"

#include "das/common.hpp"
#include "das/hdlnet/checkpoint.hpp"
#include "das/hdlnet/layers.hpp"
#include "das/hdlnet/lstm.hpp"
#include "das/hdlnet/network.hpp"
#include "das/hdlnet/training.hpp"
#include "das/io.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace das;
using namespace das::hdl;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

NetConfig tiny(LstmAxis axis)
{
    NetConfig c;
    c.input_channels = 8;
    c.input_time = 16;
    c.base_channels = 1;
    c.depth = 1;
    c.conv_h = 3;
    c.conv_w = 3;
    c.pool_h = 2;
    c.pool_w = 4;
    c.lstm_units = 3;
    c.lstm_axis = axis;
    c.dense_width = axis == LstmAxis::Channel ? 16 : 8;
    return c;
}

Tensor random_sample(const NetConfig& c, std::mt19937_64& rng)
{
    Tensor t({c.input_channels, c.input_time});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : t.span()) v = u(rng);
    return t;
}

// Biases get small random values too, so every ReLU sees a mix of signs.
ModelParams jittered(const HdlNet& net, std::mt19937_64& rng)
{
    auto p = net.init_params(rng);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (auto& nt : p)
        for (double& v : nt.value.span()) v += u(rng);
    return p;
}

physics::ImpulseKernel small_kernel() { return physics::sampled_kernel({}, {}, 4.0, 0.8, 2); }

} // namespace

TEST_CASE("conv2d same with a hand kernel")
{
    Tensor in({1, 3, 3});
    for (std::size_t i = 0; i < 9; ++i) in[i] = static_cast<double>(i + 1);
    Tensor w({1, 1, 3, 3}, 1.0), b({1}, 0.5);
    const auto out = conv2d_same(in, w, b);
    CHECK(out[4] == 45.5);       // full window
    CHECK(out[0] == 1 + 2 + 4 + 5 + 0.5); // corner sees four inputs
    CHECK(out[8] == 5 + 6 + 8 + 9 + 0.5);
}

TEST_CASE("max pool takes the first maximum and routes gradient there")
{
    Tensor in({1, 2, 4});
    const double v[] = {1, 3, 3, 0, 2, 3, 1, 1};
    for (std::size_t i = 0; i < 8; ++i) in[i] = v[i];
    const auto p = max_pool(in, 2, 4);
    CHECK(p.out[0] == 3.0);
    CHECK(p.argmax[0] == 1);
    Tensor d({1, 1, 1}, 2.0);
    const auto back = max_pool_backward(p, in.shape(), d);
    double sum = 0.0;
    for (double x : back.span()) sum += x;
    CHECK(sum == 2.0);
    CHECK(back[1] == 2.0);
    CHECK_THROWS_AS(max_pool(Tensor({1, 3, 4}), 2, 4), ConfigError);
}

TEST_CASE("transposed convolution spreads each input over its block")
{
    Tensor in({1, 1, 2}), w({1, 1, 2, 2}), b({1}, 0.0);
    in[0] = 1.0;
    in[1] = 2.0;
    for (std::size_t i = 0; i < 4; ++i) w[i] = static_cast<double>(i + 1);
    const auto out = conv_transpose(in, w, b);
    REQUIRE(out.shape() == std::vector<std::size_t>{1, 2, 4});
    const double expect[] = {1, 2, 2, 4, 3, 4, 6, 8};
    for (std::size_t i = 0; i < 8; ++i) CHECK(out[i] == expect[i]);
}

TEST_CASE("lstm steps by hand")
{
    Tensor w({4, 1}), u({4, 1}), b({4}), dw({1, 1}), db({1});
    const double wv[] = {0.1, 0.2, 0.3, 0.4}, uv[] = {0.5, -0.3, 0.2, 0.1}, bv[] = {0.0, 1.0, 0.1, -0.1};
    for (std::size_t i = 0; i < 4; ++i) {
        w[i] = wv[i];
        u[i] = uv[i];
        b[i] = bv[i];
    }
    dw[0] = 2.0;
    db[0] = -0.5;
    Tensor x({2, 1});
    x[0] = 0.5;
    x[1] = -1.0;
    const auto out = lstm_dense_forward(x, {&w, &u, &b, &dw, &db});

    double h = 0.0, c = 0.0;
    double expect[2];
    for (int t = 0; t < 2; ++t) {
        const double xi = x[static_cast<std::size_t>(t)];
        const double ig = sigmoid(0.1 * xi + 0.5 * h + 0.0);
        const double fg = sigmoid(0.2 * xi - 0.3 * h + 1.0);
        const double gg = std::tanh(0.3 * xi + 0.2 * h + 0.1);
        const double og = sigmoid(0.4 * xi + 0.1 * h - 0.1);
        c = fg * c + ig * gg;
        h = og * std::tanh(c);
        expect[t] = 2.0 * h - 0.5;
    }
    CHECK(out[0] == doctest::Approx(expect[0]).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(expect[1]).epsilon(1e-14));
}

TEST_CASE("network shapes")
{
    const HdlNet net(NetConfig::toy());
    std::mt19937_64 rng(1);
    const auto p = net.init_params(rng);
    CHECK(net.compatible(p));
    const auto y = random_sample(net.config(), rng);
    CHECK(net.forward(p, y).shape() == std::vector<std::size_t>{16, 32});
    CHECK(net.encoder_shape(0).channels == 2);
    CHECK(net.encoder_shape(1).height == 8);
    CHECK(net.encoder_shape(1).width == 8);
    const auto bn = net.bottleneck_shape();
    CHECK(bn.channels == 8);
    CHECK(bn.height == 4);
    CHECK(bn.width == 2);
    CHECK(p.find("lstm.w").shape() == std::vector<std::size_t>{16, 32});
    CHECK(p.find("dense.w").shape() == std::vector<std::size_t>{32, 4});
    CHECK(p.find("lstm.b")[4] == 1.0); // forget gate bias

    const auto full = NetConfig::full_scale();
    full.validate();
    const HdlNet big(full);
    CHECK(big.bottleneck_shape().channels == 64);
    CHECK(big.bottleneck_shape().height == 45);
    CHECK(big.bottleneck_shape().width == 16);

    NetConfig bad = NetConfig::toy();
    bad.dense_width = 31;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = NetConfig::toy();
    bad.input_time = 30;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero weights give a zero output and the plain data loss")
{
    const HdlNet net(NetConfig::toy());
    const auto p = net.zero_params();
    std::mt19937_64 rng(2);
    std::vector<Tensor> batch{random_sample(net.config(), rng), random_sample(net.config(), rng)};
    for (double v : net.forward(p, batch[0]).span()) CHECK(v == 0.0);
    double yy = 0.0;
    for (const auto& s : batch)
        for (double v : s.span()) yy += v * v;
    const auto k = small_kernel();
    CHECK(loss(net, p, batch, k, 0.1) == doctest::Approx(yy / 2.0).epsilon(1e-13));
}

TEST_CASE("loss of a known output")
{
    // With every weight zero except the dense bias, X is the bias repeated.
    const HdlNet net(tiny(LstmAxis::Channel));
    auto p = net.zero_params();
    for (auto& nt : p)
        if (nt.name == "dense.b") nt.value.fill(0.25);
    Tensor y({8, 16}, 0.0);
    const auto x = net.forward(p, y);
    for (double v : x.span()) CHECK(v == 0.25);

    const auto k = small_kernel();
    double fit = 0.0;
    for (long i = 0; i < 8; ++i) {
        double kx = 0.0;
        for (long j = -2; j <= 2; ++j)
            if (i - j >= 0 && i - j < 8) kx += k.taps[static_cast<std::size_t>(j + 2)] * 0.25;
        fit += 16.0 * kx * kx;
    }
    const std::vector<Tensor> batch{y};
    CHECK(loss(net, p, batch, k, 0.01) == doctest::Approx(fit + 0.01 * 128 * 0.25).epsilon(1e-12));
}

TEST_CASE("gradients match central differences")
{
    for (auto axis : {LstmAxis::Channel, LstmAxis::Time}) {
        CAPTURE(static_cast<int>(axis));
        const HdlNet net(tiny(axis));
        std::mt19937_64 rng(5);
        auto p = jittered(net, rng);
        std::vector<Tensor> batch{random_sample(net.config(), rng), random_sample(net.config(), rng)};
        const auto k = small_kernel();
        const double lambda = 1e-3;
        ModelParams g;
        gradients(net, p, batch, k, lambda, g);
        std::size_t checked = 0, bad = 0;
        for (std::size_t ti = 0; ti < p.size(); ++ti) {
            auto& t = p.tensor(ti);
            const std::size_t stride = std::max<std::size_t>(1, t.size() / 6);
            for (std::size_t i = 0; i < t.size(); i += stride) {
                const double keep = t[i], h = 1e-6;
                t[i] = keep + h;
                const double up = loss(net, p, batch, k, lambda);
                t[i] = keep - h;
                const double dn = loss(net, p, batch, k, lambda);
                t[i] = keep;
                const double fd = (up - dn) / (2 * h), an = g.tensor(ti)[i];
                ++checked;
                if (std::abs(fd - an) > 1e-5 + 1e-4 * std::abs(fd)) {
                    ++bad;
                    MESSAGE(p[ti].name << "[" << i << "] fd=" << fd << " analytic=" << an);
                }
            }
        }
        CHECK(checked > 40);
        CHECK(bad == 0);
    }
}

TEST_CASE("gradient batching and threading")
{
    const HdlNet net(NetConfig::toy());
    std::mt19937_64 rng(6);
    const auto p = net.init_params(rng);
    const auto s = random_sample(net.config(), rng);
    const auto k = small_kernel();
    ModelParams g1, g2;
    const std::vector<Tensor> one{s}, two{s, s};
    const double l1 = gradients(net, p, one, k, 1e-3, g1);
    const double l2 = gradients(net, p, two, k, 1e-3, g2);
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-14));
    for (std::size_t ti = 0; ti < g1.size(); ++ti)
        for (std::size_t i = 0; i < g1.tensor(ti).size(); ++i)
            CHECK(g1.tensor(ti)[i] == doctest::Approx(g2.tensor(ti)[i]).epsilon(1e-12));

    std::vector<Tensor> many;
    for (int i = 0; i < 20; ++i) many.push_back(random_sample(net.config(), rng));
    ModelParams a, b;
    gradients(net, p, many, k, 1e-3, a, 1);
    gradients(net, p, many, k, 1e-3, b, 4);
    for (std::size_t ti = 0; ti < a.size(); ++ti)
        for (std::size_t i = 0; i < a.tensor(ti).size(); ++i) CHECK(a.tensor(ti)[i] == b.tensor(ti)[i]);

    const auto even = physics::ImpulseKernel{{0.5, 1.0}, 0.8, false};
    CHECK_THROWS_AS(gradients(net, p, one, even, 1e-3, a), ConfigError);
}

TEST_CASE("adam follows the bias-corrected recurrence")
{
    ModelParams p, g;
    p.add("x", Tensor({2}, 1.0));
    g.add("x", Tensor({2}));
    TrainConfig c;
    c.learning_rate = 0.1;
    auto state = make_adam_state(p);
    const double grads[2][2] = {{0.5, -2.0}, {0.25, 1.0}};
    double x[2] = {1.0, 1.0}, m[2] = {0, 0}, v[2] = {0, 0};
    for (std::size_t step = 1; step <= 2; ++step) {
        for (std::size_t i = 0; i < 2; ++i) {
            const double gi = grads[step - 1][i];
            g.tensor(0)[i] = gi;
            m[i] = 0.9 * m[i] + 0.1 * gi;
            v[i] = 0.999 * v[i] + 0.001 * gi * gi;
            const double mh = m[i] / (1 - std::pow(0.9, step));
            const double vh = v[i] / (1 - std::pow(0.999, step));
            x[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
        }
        adam_step(p, g, c, step, state);
    }
    CHECK(p.tensor(0)[0] == doctest::Approx(x[0]).epsilon(1e-14));
    CHECK(p.tensor(0)[1] == doctest::Approx(x[1]).epsilon(1e-14));
}

TEST_CASE("training bookkeeping and determinism")
{
    const auto cfg = tiny(LstmAxis::Time);
    std::mt19937_64 rng(7);
    std::vector<Tensor> data;
    for (int i = 0; i < 10; ++i) data.push_back(random_sample(cfg, rng));
    const auto k = small_kernel();
    TrainConfig t;
    t.batch_size = 4;
    t.learning_rate = 1e-3;

    t.epochs = 0;
    const auto none = train(data, k, cfg, t);
    CHECK(none.history.empty());
    std::mt19937_64 init_rng(t.seed);
    const auto init = HdlNet(cfg).init_params(init_rng);
    for (std::size_t ti = 0; ti < init.size(); ++ti)
        for (std::size_t i = 0; i < init.tensor(ti).size(); ++i)
            CHECK(none.params.tensor(ti)[i] == init.tensor(ti)[i]);

    t.epochs = 3;
    std::size_t calls = 0;
    const auto a = train(data, k, cfg, t, nullptr, [&](const EpochStats&) { ++calls; });
    const auto b = train(data, k, cfg, t);
    CHECK(a.history.size() == 3);
    CHECK(calls == 3);
    CHECK(a.train_count == 8);
    CHECK(a.validation_count == 2);
    for (std::size_t e = 0; e < 3; ++e) {
        CHECK(a.history[e].train_loss == b.history[e].train_loss);
        CHECK(a.history[e].validation_loss == b.history[e].validation_loss);
        CHECK(std::isfinite(a.history[e].validation_loss));
    }
    CHECK(encode_checkpoint(cfg, a.params) == encode_checkpoint(cfg, b.params));

    auto out_of_range = data;
    out_of_range[0][0] = 1.5;
    CHECK_THROWS_AS(train(out_of_range, k, cfg, t), ConfigError);
}

TEST_CASE("training lowers the loss")
{
    const auto cfg = tiny(LstmAxis::Time);
    std::mt19937_64 rng(8);
    std::vector<Tensor> data;
    for (int i = 0; i < 16; ++i) data.push_back(random_sample(cfg, rng));
    TrainConfig t;
    t.batch_size = 4;
    t.learning_rate = 2e-3;
    t.epochs = 30;
    t.validation_fraction = 0.0;
    const auto r = train(data, small_kernel(), cfg, t);
    CHECK(r.history.back().train_loss < 0.8 * r.history.front().train_loss);
    CHECK(std::isnan(r.history.back().validation_loss));
}

TEST_CASE("checkpoint round trip and errors")
{
    const auto cfg = tiny(LstmAxis::Channel);
    const HdlNet net(cfg);
    std::mt19937_64 rng(9);
    const auto p = net.init_params(rng);
    const auto bytes = encode_checkpoint(cfg, p);
    CHECK(bytes.substr(0, 4) == "HDLN");
    const auto back = decode_checkpoint(bytes);
    CHECK(back.config == cfg);
    REQUIRE(back.params.same_layout(p));
    for (std::size_t ti = 0; ti < p.size(); ++ti)
        for (std::size_t i = 0; i < p.tensor(ti).size(); ++i)
            CHECK(back.params.tensor(ti)[i] == static_cast<double>(static_cast<float>(p.tensor(ti)[i])));
    CHECK(encode_checkpoint(back.config, back.params) == bytes);

    auto kind = [](const std::string& b) {
        try {
            decode_checkpoint(b);
        } catch (const io::IoError& e) {
            return static_cast<int>(e.kind());
        }
        return -1;
    };
    std::string magic = bytes;
    magic[0] = 'X';
    CHECK(kind(magic) == static_cast<int>(io::IoErrorKind::BadMagic));
    std::string version = bytes;
    version[4] = 9;
    CHECK(kind(version) == static_cast<int>(io::IoErrorKind::VersionMismatch));
    CHECK(kind(bytes.substr(0, bytes.size() - 3)) == static_cast<int>(io::IoErrorKind::Truncated));
    CHECK(kind(bytes + "z") >= 0);

    const auto path = std::filesystem::temp_directory_path() / "das_ckpt_test.hdln";
    write_checkpoint(path, cfg, p);
    CHECK(read_checkpoint(path).config == cfg);
    std::filesystem::remove(path);
}

TEST_CASE("tiling")
{
    CHECK(tile_origins(32, 16) == std::vector<std::size_t>{0, 16});
    CHECK(tile_origins(40, 16) == std::vector<std::size_t>{0, 16, 24});
    CHECK(tile_origins(16, 16) == std::vector<std::size_t>{0});
    CHECK_THROWS(tile_origins(8, 16));

    Waterfall w(20, 40);
    std::mt19937_64 rng(10);
    for (double& v : w.values()) v = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto tiles = make_tiles(w, 16, 32);
    CHECK(tiles.size() == 4);
    CHECK(tiles[3][0] == w(4, 8));

    const HdlNet net(NetConfig::toy());
    const auto p = net.init_params(rng);
    const auto k = small_kernel();
    const auto r = denoise(net, p, w, k);
    CHECK(r.estimate.same_shape(w));
    CHECK(r.reconstruction.same_shape(w));
    CHECK(r.estimate.all_finite());
    const auto r2 = denoise(net, p, w, k, 3);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(r.estimate.values()[i] == r2.estimate.values()[i]);
}
