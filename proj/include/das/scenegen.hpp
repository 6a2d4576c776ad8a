#pragma once

#include "das/physics.hpp"
#include "das/waterfall.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace das::scene {

struct SceneConfig {
    std::size_t n_channels = 360;
    std::size_t n_time = 1024;
    double channel_spacing = 0.8; ///< [m]
    double sample_rate = 11.0;    ///< [Hz]
    physics::PhysicsParams physics{};
    std::size_t kernel_half_width = 20;
    double reference_force = 1.0e4; ///< deposit amplitude = F / reference_force
    double v_max = 60.0;            ///< [m/s] bound on |v(t)|
    double noise_sigma = 0.1;
    double outlier_rate = 0.0;
    double outlier_amp = 1.0;
    std::uint64_t seed = 1;

    void validate() const;
    double duration() const { return static_cast<double>(n_time) / sample_rate; }
};

/// Piecewise-linear speed knot; times are absolute seconds from the window start.
struct SpeedKnot {
    double time = 0.0;
    double speed = 0.0; ///< [m/s], sign gives travel direction along the fiber
};

struct VehicleSpec {
    physics::VehicleGeometry geometry{};
    double lateral_offset = 4.0; ///< d_y [m]
    double entry_time = 0.0;     ///< [s]
    double entry_channel = 0.0;  ///< channel index at entry_time
    /// Knots sorted by time; speed is held constant before the first and
    /// after the last knot.
    std::vector<SpeedKnot> speed_profile{{0.0, 20.0}};

    static VehicleSpec constant_speed(double speed, double entry_time, double entry_channel = 0.0);

    double speed_at(double t) const;
    /// Signed distance [m] travelled between entry_time and t.
    double displacement(double t) const;
};

struct TruthPoint {
    std::size_t time_index = 0;
    double channel = 0.0;
};

/// Per vehicle, the positions at every time column where it lies within the
/// fiber span [0, n_channels - 1].
struct GroundTruth {
    std::vector<std::vector<TruthPoint>> vehicles;
};

struct SceneResult {
    Waterfall waterfall;
    GroundTruth truth;
};

/// Fractional channel position of a vehicle at time t.
double channel_position(const VehicleSpec& v, double t, double channel_spacing);

SceneResult simulate_clean(const SceneConfig& config, const std::vector<VehicleSpec>& vehicles);

/// Gaussian noise then Bernoulli-selected +/- outlier spikes, seeded by config.seed.
Waterfall add_noise(const Waterfall& w, const SceneConfig& config);

/// Random constant-speed traffic entering at channel 0; used for training sets.
struct TrafficSpec {
    std::size_t min_vehicles = 1;
    std::size_t max_vehicles = 6;
    double min_speed = 12.0;
    double max_speed = 30.0;
    double min_force = 1.2e4;
    double max_force = 3.0e4;
    double min_lateral = 4.0;
    double max_lateral = 4.0;
};

std::vector<VehicleSpec> random_traffic(const SceneConfig& config, const TrafficSpec& traffic,
                                        std::mt19937_64& rng);

/// `count` normalized tiles of tile_channels x tile_time, each cut at a random
/// origin from its own noisy random-traffic scene. One generator seeded with
/// `seed` drives scene seeds, traffic and tile origins.
std::vector<Waterfall> random_tiles(const SceneConfig& config, const TrafficSpec& traffic,
                                    std::size_t count, std::size_t tile_channels,
                                    std::size_t tile_time, std::uint64_t seed);

void write_ground_truth(std::ostream& os, const GroundTruth& truth);

} // namespace das::scene
