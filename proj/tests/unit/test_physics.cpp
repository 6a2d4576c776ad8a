#include "doctest.h"

#include "das/common.hpp"
#include "das/physics.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace das;
using namespace das::physics;

namespace {

PhysicsParams unit_params()
{
    PhysicsParams p;
    p.shear_modulus = 1.0;
    p.poisson = 0.25;
    p.depth = 0.075;
    return p;
}

double peak_tap(const VehicleGeometry& g, const PhysicsParams& p, double dy)
{
    double m = 0.0;
    for (int j = -20; j <= 20; ++j) m = std::max(m, vehicle_kernel(0.8 * j, g, p, dy));
    return m;
}

} // namespace

TEST_CASE("deformation reference values")
{
    // 30-digit evaluation of the closed form, made outside this code base.
    CHECK(deformation(1.0, 1.0, unit_params(), 1.0) == doctest::Approx(-0.0167395447502603233).epsilon(1e-14));
    CHECK(deformation(0.0, 1.0, unit_params(), 1.0) == 0.0);

    PhysicsParams p;
    CHECK(point_load_kernel(1.6, p, 1e4, 1.0) == doctest::Approx(1.52564137158692365e-6).epsilon(1e-12));
    VehicleGeometry g;
    CHECK(vehicle_kernel(2.4, g, p, 4.0) == doctest::Approx(6.22098287596480959e-7).epsilon(1e-12));
    CHECK(vehicle_kernel(0.0, g, p, 4.0) == doctest::Approx(1.04690416072435210e-6).epsilon(1e-12));
}

TEST_CASE("deformation is odd in dx and linear in force")
{
    const PhysicsParams p;
    CHECK(deformation(-2.0, 1.0, p, 1.0) == -deformation(2.0, 1.0, p, 1.0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 500; ++i) {
        const double dx = u(rng), dy = u(rng);
        CHECK(deformation(dx, dy, p, 1.0) + deformation(-dx, dy, p, 1.0) == 0.0);
        const double f = std::abs(u(rng)) + 1.0;
        CHECK(deformation(dx, dy, p, f) == doctest::Approx(f * deformation(dx, dy, p, 1.0)).epsilon(1e-14));
    }
}

TEST_CASE("deformation at the load point is a domain error")
{
    PhysicsParams p;
    p.depth = 0.0; // bypasses validate(); the formula itself must refuse r = 0
    CHECK_THROWS_AS(deformation(0.0, 0.0, p, 1.0), DomainError);
}

TEST_CASE("parameter validation")
{
    PhysicsParams p;
    p.poisson = 0.5;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.depth = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    VehicleGeometry g;
    g.wheel_weights = {0.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g.wheel_weights = {1.0, -1.0, 1.0, 1.0};
    CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("wheel offsets")
{
    VehicleGeometry g;
    g.axle_length = 1.6;
    g.wheelbase = 2.7;
    const auto o = g.wheel_offsets();
    CHECK(o[0][0] == 1.35);
    CHECK(o[0][1] == 0.8);
    CHECK(o[1][0] == 1.35);
    CHECK(o[1][1] == -0.8);
    CHECK(o[2][0] == -1.35);
    CHECK(o[2][1] == -0.8);
    CHECK(o[3][0] == -1.35);
    CHECK(o[3][1] == 0.8);
    CHECK(g.total_force() == 15000.0);
}

TEST_CASE("point load kernel")
{
    const PhysicsParams p;
    const double l = p.gauge_length;
    CHECK(point_load_kernel(0.0, p, 1e4, 1.0)
          == doctest::Approx(2.0 * std::abs(deformation(l / 2, 1.0, p, 1e4)) / l).epsilon(1e-14));
    CHECK(point_load_kernel(1.6, p, 3e4, 1.0)
          == doctest::Approx(3.0 * point_load_kernel(1.6, p, 1e4, 1.0)).epsilon(1e-14));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int i = 0; i < 1000; ++i) CHECK(point_load_kernel(u(rng), p, 1e4, u(rng)) >= 0.0);
}

TEST_CASE("vehicle kernel symmetry and linearity")
{
    const PhysicsParams p;
    VehicleGeometry g;
    for (double dx : {0.8, 1.6, 3.2})
        CHECK(vehicle_kernel(dx, g, p, 1.0) == doctest::Approx(vehicle_kernel(-dx, g, p, 1.0)).epsilon(1e-13));
    VehicleGeometry g2 = g;
    for (double& w : g2.wheel_weights) w *= 2.0;
    CHECK(vehicle_kernel(2.4, g2, p, 1.0) == doctest::Approx(2.0 * vehicle_kernel(2.4, g, p, 1.0)).epsilon(1e-14));
}

TEST_CASE("sampled peak falls as the lateral offset grows")
{
    const PhysicsParams p;
    const VehicleGeometry g;
    double prev = peak_tap(g, p, 0.5);
    for (double dy : {1.0, 2.0, 4.0}) {
        const double cur = peak_tap(g, p, dy);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("attenuation with lateral offset at a fixed offset")
{
    // dx = b/2 is where the kernel peaks for dy near 1 m. Below about 1 m the
    // four-wheel response is not monotone in dy, so the sweep starts there.
    const PhysicsParams p;
    const VehicleGeometry g;
    double prev = vehicle_kernel(1.35, g, p, 1.0);
    for (int i = 1; i <= 10; ++i) {
        const double cur = vehicle_kernel(1.35, g, p, 1.0 + 0.5 * i);
        CHECK(cur < prev);
        prev = cur;
    }
    double pprev = point_load_kernel(0.0, p, 1e4, 0.0);
    for (int i = 1; i <= 10; ++i) {
        const double cur = point_load_kernel(0.0, p, 1e4, 0.25 * i);
        CHECK(cur < pprev);
        pprev = cur;
    }
}

TEST_CASE("sampled kernel shape")
{
    const PhysicsParams p;
    const VehicleGeometry g;
    const auto k = sampled_kernel(g, p, 4.0, 0.8, 20);
    REQUIRE(k.taps.size() == 41);
    CHECK(k.center() == 20);
    CHECK(k.normalized);
    double m = 0.0;
    for (double t : k.taps) m = std::max(m, std::abs(t));
    CHECK(m == 1.0);
    CHECK(k.taps[20] == 1.0);
    for (std::size_t j = 1; j <= 20; ++j) CHECK(k.taps[20 + j] == doctest::Approx(k.taps[20 - j]).epsilon(1e-13));

    const auto k1 = sampled_kernel(g, p, 4.0, 0.8, 1);
    REQUIRE(k1.taps.size() == 3);
    CHECK(k1.taps[1] == 1.0);

    // Independently evaluated ratios for half width 3.
    const auto k3 = sampled_kernel(g, p, 4.0, 0.8, 3);
    const double expect[] = {0.594226588197005, 0.846700213501378, 0.974322486684911, 1.0};
    for (std::size_t j = 0; j < 4; ++j) CHECK(k3.taps[j] == doctest::Approx(expect[j]).epsilon(1e-12));
}

TEST_CASE("point-load kernel support spans a few meters")
{
    for (double dz : {0.05, 0.075, 0.10}) {
        PhysicsParams p;
        p.depth = dz;
        const auto k = sampled_point_kernel(p, 1e4, 0.0, 0.8, 40);
        int above = 0;
        for (double t : k.taps) above += t > 0.01 ? 1 : 0;
        CHECK(above >= 13);
        CHECK(above <= 17);
        CHECK(k.taps[k.center()] == 1.0);
    }
}

TEST_CASE("degenerate kernels are rejected")
{
    VehicleGeometry g;
    CHECK_THROWS_AS(sampled_kernel(g, {}, 4.0, 0.8, 0), ConfigError);
    CHECK_THROWS_AS(sampled_kernel(g, {}, 4.0, 0.0, 3), ConfigError);
    CHECK_THROWS_AS(sampled_point_kernel({}, 0.0, 1.0, 0.8, 3), ConfigError);
}

TEST_CASE("kernel text round trip")
{
    const auto k = sampled_kernel({}, {}, 4.0, 0.8, 5);
    std::stringstream ss;
    write_kernel(ss, k);
    CHECK(ss.str().rfind("# channel_spacing=0.8 half_width=5 normalized=1\n", 0) == 0);
    const auto back = read_kernel(ss);
    CHECK(back.taps == k.taps);
    CHECK(back.channel_spacing == k.channel_spacing);
    CHECK(back.normalized);
}
