#include "doctest.h"

#include "das/common.hpp"
#include "das/scenegen.hpp"
#include "das/tracker.hpp"

#include <cmath>
#include <sstream>

using namespace das;
using namespace das::tracker;

namespace {

struct Scene {
    Waterfall d;
    scene::GroundTruth truth;
};

Scene clean_scene(const std::vector<scene::VehicleSpec>& vehicles, std::size_t n_ch = 360,
                  std::size_t n_t = 1024)
{
    scene::SceneConfig c;
    c.n_channels = n_ch;
    c.n_time = n_t;
    c.noise_sigma = 0.0;
    auto r = scene::simulate_clean(c, vehicles);
    return {normalize(r.waterfall), r.truth};
}

// Fraction of truth rows where the track sits within `tol` channels.
double match_fraction(const Trajectory& t, const std::vector<scene::TruthPoint>& truth, double tol)
{
    std::size_t hit = 0, total = 0;
    for (const auto& p : t.points) {
        for (const auto& q : truth) {
            if (q.time_index != p.time) continue;
            ++total;
            if (std::abs(static_cast<double>(p.channel) - q.channel) <= tol) ++hit;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

} // namespace

TEST_CASE("peak finding")
{
    TrackerConfig c;
    std::vector<double> s(100, 0.0);
    CHECK(find_peaks(s, c).empty());
    s[20] = 1.0;
    s[60] = 0.8;
    CHECK(find_peaks(s, c) == std::vector<std::size_t>{20, 60});
    s[22] = 0.9; // too close to 20
    s[21] = 0.5;
    CHECK(find_peaks(s, c) == std::vector<std::size_t>{20, 60});
    c.peak_min_separation = 2;
    CHECK(find_peaks(s, c) == std::vector<std::size_t>{20, 22, 60});
    CHECK_THROWS_AS(find_peaks(std::vector<double>{1.0, 2.0}, c), ConfigError);
}

TEST_CASE("speed window")
{
    const auto w = speed_window(10.0, 35.0, 0.8, 11.0);
    CHECK(w.lo == 1);
    CHECK(w.hi == 4);
    const auto z = speed_window(0.0, 0.0, 0.8, 11.0);
    CHECK(z.lo == 0);
    CHECK(z.hi == 0);
}

TEST_CASE("speed from a fixed slope")
{
    Trajectory t;
    for (std::size_t k = 0; k <= 100; ++k)
        t.points.push_back({k, static_cast<std::size_t>(std::lround(2.2727 * static_cast<double>(k)))});
    const auto e = estimate_speeds(t, 0.8, 11.0);
    CHECK(std::abs(e.average - 20.0) < 0.05);
    CHECK(e.per_step.size() == 100);
    CHECK(std::abs(end_slope(t.points, 1) - 2.2727) < 0.01);
    Trajectory one;
    one.points.push_back({0, 0});
    CHECK_THROWS_AS(estimate_speeds(one, 0.8, 11.0), NumericError);
}

TEST_CASE("end slope of a quadratic")
{
    std::vector<TrackPoint> pts;
    for (std::size_t k = 0; k < 10; ++k) pts.push_back({k, 100 + 3 * k + k * k});
    // d/dk (3k + k^2) at k = 9
    CHECK(end_slope(pts, 2) == doctest::Approx(21.0).epsilon(1e-9));
}

TEST_CASE("single vehicle is recovered on a noiseless scene")
{
    const auto s = clean_scene({scene::VehicleSpec::constant_speed(20.0, 3.0)});
    const auto tracks = extract_trajectories(s.d, TrackerConfig{});
    REQUIRE(tracks.size() == 1);
    CHECK(match_fraction(tracks[0], s.truth.vehicles[0], 2.0) >= 0.95);
    CHECK(std::abs(tracks[0].average_speed - 20.0) < 0.5);
    CHECK(tracks[0].points.back().channel == 359);
}

TEST_CASE("six vehicles give six trajectories")
{
    std::vector<scene::VehicleSpec> v;
    const double speeds[] = {15, 18, 20, 22, 25, 28};
    for (int i = 0; i < 6; ++i) v.push_back(scene::VehicleSpec::constant_speed(speeds[i], 2.0 + 14.0 * i));
    const auto s = clean_scene(v);
    const auto tracks = extract_trajectories(s.d, TrackerConfig{});
    REQUIRE(tracks.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(match_fraction(tracks[i], s.truth.vehicles[i], 2.0) >= 0.9);
        CHECK(std::abs(tracks[i].average_speed - speeds[i]) < 0.05 * speeds[i]);
    }
}

TEST_CASE("decelerating vehicle bends the track")
{
    scene::VehicleSpec v;
    v.entry_time = 2.0;
    v.speed_profile = {{2.0, 30.0}, {14.0, 12.0}};
    const auto s = clean_scene({v});
    const auto tracks = extract_trajectories(s.d, TrackerConfig{});
    REQUIRE(tracks.size() == 1);
    CHECK(match_fraction(tracks[0], s.truth.vehicles[0], 3.0) >= 0.9);
    const auto& f = tracks[0].fitted_speed_per_step;
    REQUIRE(f.size() > 40);
    double early = 0, late = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        early += f[i];
        late += f[f.size() - 1 - i];
    }
    CHECK(early > late + 10.0 * 8.0);
}

TEST_CASE("crossing vehicles keep their own tracks")
{
    const auto s = clean_scene({scene::VehicleSpec::constant_speed(12.0, 2.0),
                                scene::VehicleSpec::constant_speed(30.0, 6.0)});
    const auto tracks = extract_trajectories(s.d, TrackerConfig{});
    REQUIRE(tracks.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& truth_end = s.truth.vehicles[i].back();
        const auto& end = tracks[i].points.back();
        CHECK(std::abs(static_cast<double>(end.time) - static_cast<double>(truth_end.time_index)) <= 2.0);
    }
}

TEST_CASE("reverse direction")
{
    const auto s = clean_scene({scene::VehicleSpec::constant_speed(-20.0, 3.0, 359.0)});
    TrackerConfig c;
    c.direction = Direction::Reverse;
    const auto tracks = extract_trajectories(s.d, c);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].points.front().channel == 359);
    CHECK(tracks[0].points.back().channel == 0);
    CHECK(std::abs(tracks[0].average_speed + 20.0) < 0.5);
    CHECK(match_fraction(tracks[0], s.truth.vehicles[0], 2.0) >= 0.95);
}

TEST_CASE("trajectory text round trip")
{
    const auto s = clean_scene({scene::VehicleSpec::constant_speed(20.0, 1.0)}, 120, 256);
    const auto tracks = extract_trajectories(s.d, TrackerConfig{});
    REQUIRE(tracks.size() == 1);
    std::stringstream ss;
    write_trajectories(ss, tracks, 0.8, 11.0);
    const auto back = read_trajectories(ss);
    REQUIRE(back.size() == 1);
    CHECK(back[0].points == tracks[0].points);
    CHECK(back[0].average_speed == tracks[0].average_speed);

    std::istringstream bad("12,3,4\n");
    CHECK_THROWS(read_trajectories(bad));
}

TEST_CASE("tracker validation")
{
    TrackerConfig c;
    c.v_min_init = 40.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.confidence = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
