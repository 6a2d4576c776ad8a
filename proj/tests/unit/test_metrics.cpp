#include "doctest.h"

#include "das/common.hpp"
#include "das/metrics.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace das;
using namespace das::metrics;

namespace {

Waterfall random_waterfall(std::size_t rows, std::size_t cols, std::uint64_t seed)
{
    Waterfall w(rows, cols);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : w.values()) v = u(rng);
    return w;
}

} // namespace

TEST_CASE("mse")
{
    Waterfall a(2, 2), b(2, 2);
    CHECK(mse(a, b) == 0.0);
    b(0, 0) = 1.0;
    b(1, 1) = -1.0;
    CHECK(mse(a, b) == 0.5);
    Waterfall c(2, 3);
    CHECK_THROWS_AS(mse(a, c), ConfigError);
}

TEST_CASE("psnr")
{
    CHECK(psnr_from_mse(0.01, 1.0) == doctest::Approx(20.0));
    // 10 log10(255^2 / 1)
    CHECK(psnr_from_mse(1.0, 255.0) == doctest::Approx(48.1308036086791).epsilon(1e-12));
    CHECK(psnr_from_mse(0.0, 1.0) == kPsnrInfinite);
    CHECK_THROWS_AS(psnr_from_mse(1.0, 0.0), ConfigError);
    const auto w = random_waterfall(10, 10, 1);
    CHECK(psnr(w, w, 1.0) == kPsnrInfinite);
}

TEST_CASE("ssim of identical images is one")
{
    const auto w = random_waterfall(20, 30, 2);
    CHECK(ssim(w, w, SsimConfig{}) == doctest::Approx(1.0).epsilon(1e-12));
    Waterfall flat(12, 12);
    for (double& v : flat.values()) v = 0.3;
    CHECK(ssim(flat, flat, SsimConfig{}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim is symmetric and bounded")
{
    const auto a = random_waterfall(16, 24, 3), b = random_waterfall(16, 24, 4);
    const SsimConfig c;
    const double ab = ssim(a, b, c), ba = ssim(b, a, c);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab < 1.0);
    CHECK(ab >= -1.0);
}

TEST_CASE("ssim of a negated zero-mean image is negative")
{
    // Checkerboard signs with a per-row amplitude: every 8x8 window has zero mean.
    Waterfall a(16, 16);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 0.5);
    for (std::size_t r = 0; r < 16; ++r) {
        const double amp = u(rng);
        for (std::size_t c = 0; c < 16; ++c) a(r, c) = ((r + c) % 2 == 0 ? amp : -amp);
    }
    Waterfall b = a;
    for (double& v : b.values()) v = -v;
    CHECK(ssim(a, b, SsimConfig{}) < 0.0);
}

TEST_CASE("ssim single window against a two-pass oracle")
{
    const auto a = random_waterfall(8, 8, 6), b = random_waterfall(8, 8, 7);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < 64; ++i) {
        ma += a.values()[i];
        mb += b.values()[i];
    }
    ma /= 64;
    mb /= 64;
    double va = 0, vb = 0, cov = 0;
    for (std::size_t i = 0; i < 64; ++i) {
        const double da = a.values()[i] - ma, db = b.values()[i] - mb;
        va += da * da;
        vb += db * db;
        cov += da * db;
    }
    va /= 64;
    vb /= 64;
    cov /= 64;
    const double c1 = 1e-4, c2 = 9e-4, c3 = 4.5e-4;
    const double sa = std::sqrt(va), sb = std::sqrt(vb);
    const double l = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    const double c = (2 * sa * sb + c2) / (va + vb + c2);
    const double s = (cov + c3) / (sa * sb + c3);
    CHECK(ssim(a, b, SsimConfig{}) == doctest::Approx(l * c * s).epsilon(1e-10));

    SsimConfig e;
    e.alpha = 2.0;
    e.beta = 0.5;
    e.gamma = 1.5;
    const double expect = std::pow(l, 2.0) * std::pow(c, 0.5) * std::copysign(std::pow(std::abs(s), 1.5), s);
    CHECK(ssim(a, b, e) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("ssim configuration")
{
    const auto c = SsimConfig::for_range(255.0);
    CHECK(c.c1 == doctest::Approx(6.5025));
    CHECK(c.c2 == doctest::Approx(58.5225));
    CHECK(c.c3 == doctest::Approx(29.26125));
    SsimConfig bad;
    bad.window = 2;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    const auto w = random_waterfall(5, 40, 1);
    CHECK_THROWS_AS(ssim(w, w, SsimConfig{}), ConfigError);
}

TEST_CASE("report lines")
{
    const auto a = random_waterfall(10, 10, 8), b = random_waterfall(10, 10, 9);
    const auto r = evaluate(a, b, 1.0, SsimConfig{});
    CHECK(r.mse == mse(a, b));
    std::ostringstream os;
    write_report(os, r, 1.0, SsimConfig{});
    CHECK(os.str().find("psnr_db=") != std::string::npos);
    CHECK(os.str().find("ssim_window=8\n") != std::string::npos);
}
