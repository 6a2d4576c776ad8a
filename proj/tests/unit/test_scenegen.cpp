#include "doctest.h"

#include "das/common.hpp"
#include "das/scenegen.hpp"

#include <cmath>
#include <sstream>

using namespace das;
using namespace das::scene;

namespace {

SceneConfig small_scene()
{
    SceneConfig c;
    c.n_channels = 64;
    c.n_time = 128;
    c.kernel_half_width = 10;
    c.noise_sigma = 0.0;
    return c;
}

} // namespace

TEST_CASE("empty scene is all zero")
{
    const auto r = simulate_clean(small_scene(), {});
    for (double v : r.waterfall.values()) CHECK(v == 0.0);
    CHECK(r.truth.vehicles.empty());
}

TEST_CASE("stationary vehicle gives identical columns")
{
    auto v = VehicleSpec::constant_speed(0.0, 0.0, 30.0);
    const auto r = simulate_clean(small_scene(), {v});
    const auto first = r.waterfall.column(0);
    for (std::size_t t = 1; t < 128; ++t) CHECK(r.waterfall.column(t) == first);
}

TEST_CASE("ground truth follows the kinematics")
{
    SceneConfig c;
    c.noise_sigma = 0.0;
    const auto v = VehicleSpec::constant_speed(20.0, 2.0);
    const auto r = simulate_clean(c, {v});
    REQUIRE(r.truth.vehicles.size() == 1);
    const auto& pts = r.truth.vehicles[0];
    REQUIRE(pts.size() > 10);
    // Independent closed form: channel = v (t/fs - t0) / spacing.
    for (const auto& p : pts)
        CHECK(p.channel == doctest::Approx(20.0 * (p.time_index / 11.0 - 2.0) / 0.8).epsilon(1e-12));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        const double x = static_cast<double>(p.time_index);
        sx += x;
        sy += p.channel;
        sxx += x * x;
        sxy += x * p.channel;
    }
    const double n = static_cast<double>(pts.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(std::abs(slope - 20.0 / (11.0 * 0.8)) < 1e-9);
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].time_index == pts[i - 1].time_index + 1);
}

TEST_CASE("piecewise-linear speed profile")
{
    VehicleSpec v;
    v.entry_time = 1.0;
    v.speed_profile = {{1.0, 20.0}, {3.0, 10.0}};
    CHECK(v.speed_at(0.0) == 20.0);
    CHECK(v.speed_at(2.0) == doctest::Approx(15.0));
    CHECK(v.speed_at(9.0) == 10.0);
    // Trapezoid: 2 s averaging 15 m/s, then 10 m/s.
    CHECK(v.displacement(3.0) == doctest::Approx(30.0));
    CHECK(v.displacement(4.0) == doctest::Approx(40.0));
}

TEST_CASE("superposition")
{
    const auto c = small_scene();
    const auto a = VehicleSpec::constant_speed(15.0, 0.5);
    auto b = VehicleSpec::constant_speed(25.0, 2.0);
    b.geometry.wheel_weights = {5000, 5000, 4000, 4000};
    const auto ab = simulate_clean(c, {a, b}).waterfall;
    const auto wa = simulate_clean(c, {a}).waterfall;
    const auto wb = simulate_clean(c, {b}).waterfall;
    for (std::size_t i = 0; i < ab.size(); ++i)
        CHECK(ab.values()[i] == doctest::Approx(wa.values()[i] + wb.values()[i]).epsilon(1e-14));
}

TEST_CASE("amplitude follows the vehicle load")
{
    const auto c = small_scene();
    auto light = VehicleSpec::constant_speed(0.0, 0.0, 30.0);
    auto heavy = light;
    for (double& w : heavy.geometry.wheel_weights) w *= 2.0;
    const auto a = simulate_clean(c, {light}).waterfall;
    const auto b = simulate_clean(c, {heavy}).waterfall;
    CHECK(a(30, 0) == doctest::Approx(1.5));
    CHECK(b(30, 0) == doctest::Approx(3.0));
}

TEST_CASE("noise")
{
    SceneConfig c;
    c.noise_sigma = 0.0;
    const auto clean = simulate_clean(c, {VehicleSpec::constant_speed(20.0, 1.0)}).waterfall;
    const auto same = add_noise(clean, c);
    CHECK(std::equal(same.values().begin(), same.values().end(), clean.values().begin()));

    c.noise_sigma = 0.1;
    c.seed = 77;
    const auto n1 = add_noise(clean, c), n2 = add_noise(clean, c);
    CHECK(std::equal(n1.values().begin(), n1.values().end(), n2.values().begin()));
    double s = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double d = n1.values()[i] - clean.values()[i];
        s += d;
        ss += d * d;
    }
    const double n = static_cast<double>(clean.size());
    const double sd = std::sqrt(ss / n - (s / n) * (s / n));
    // 368640 samples: the std of the sample std is about 1.2e-4.
    CHECK(std::abs(sd - 0.1) < 0.005);

    c.noise_sigma = 0.0;
    c.outlier_rate = 0.01;
    c.outlier_amp = 3.0;
    const auto o = add_noise(clean, c);
    std::size_t spikes = 0;
    for (double v : o.values()) spikes += std::abs(v) == 3.0 ? 1 : 0;
    CHECK(spikes > 3000);
    CHECK(spikes < 4400);
}

TEST_CASE("normalize")
{
    Waterfall w(3, 3);
    const double vals[] = {-2, 6, 2, 0, 1, 3, 4, 5, -1};
    std::copy(std::begin(vals), std::end(vals), w.values().begin());
    const auto n = normalize(w);
    CHECK(n(0, 2) == 0.5);
    CHECK(n(0, 0) == 0.0);
    CHECK(n(0, 1) == 1.0);
    CHECK(n.normalized);

    Waterfall unit(2, 2);
    unit(0, 1) = 1.0;
    unit(1, 0) = 0.25;
    const auto u = normalize(unit);
    CHECK(std::equal(u.values().begin(), u.values().end(), unit.values().begin()));

    Waterfall flat(4, 4);
    for (double& v : flat.values()) v = 3.0;
    const auto nf = normalize(flat);
    for (double v : nf.values()) CHECK(v == 0.0);

    w(1, 1) = std::nan("");
    CHECK_THROWS_AS(normalize(w), NumericError);
}

TEST_CASE("scene validation")
{
    SceneConfig c = small_scene();
    c.n_channels = 4;
    CHECK_THROWS_AS(simulate_clean(c, {}), ConfigError);
    c = small_scene();
    auto fast = VehicleSpec::constant_speed(80.0, 0.0);
    CHECK_THROWS_AS(simulate_clean(c, {fast}), ConfigError);
    auto late = VehicleSpec::constant_speed(20.0, 1e6);
    CHECK_THROWS_AS(simulate_clean(c, {late}), ConfigError);
}

TEST_CASE("random traffic is seeded")
{
    SceneConfig c;
    std::mt19937_64 r1(5), r2(5);
    const auto a = random_traffic(c, {}, r1), b = random_traffic(c, {}, r2);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() >= 1);
    CHECK(a.size() <= 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].entry_time == b[i].entry_time);
        CHECK(a[i].speed_profile.front().speed == b[i].speed_profile.front().speed);
    }
}

TEST_CASE("ground truth text")
{
    const auto r = simulate_clean(small_scene(), {VehicleSpec::constant_speed(20.0, 0.0)});
    std::ostringstream os;
    write_ground_truth(os, r.truth);
    CHECK(os.str().rfind("# vehicle 0\n0,0\n1,", 0) == 0);
}
