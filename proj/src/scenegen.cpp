#include "das/scenegen.hpp"

#include "das/common.hpp"
#include "das/io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace das::scene {

void SceneConfig::validate() const
{
    if (n_channels < 8 || n_time < 8) throw ConfigError("scene needs at least 8 channels and 8 time samples");
    if (!(channel_spacing > 0.0)) throw ConfigError("channel spacing must be positive");
    if (!(sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
    if (!(outlier_rate >= 0.0 && outlier_rate < 1.0)) throw ConfigError("outlier rate must lie in [0, 1)");
    if (!(reference_force > 0.0)) throw ConfigError("reference force must be positive");
    if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
    if (kernel_half_width < 1) throw ConfigError("kernel half width must be at least 1");
    physics.validate();
}

VehicleSpec VehicleSpec::constant_speed(double speed, double entry_time, double entry_channel)
{
    VehicleSpec v;
    v.entry_time = entry_time;
    v.entry_channel = entry_channel;
    v.speed_profile = {{entry_time, speed}};
    return v;
}

double VehicleSpec::speed_at(double t) const
{
    const auto& k = speed_profile;
    if (k.empty()) return 0.0;
    if (t <= k.front().time) return k.front().speed;
    if (t >= k.back().time) return k.back().speed;
    auto hi = std::upper_bound(k.begin(), k.end(), t,
                               [](double x, const SpeedKnot& s) { return x < s.time; });
    auto lo = hi - 1;
    const double u = (t - lo->time) / (hi->time - lo->time);
    return lo->speed + u * (hi->speed - lo->speed);
}

namespace {

// Antiderivative of the speed profile, zero at the first knot.
double travelled(const std::vector<SpeedKnot>& k, double t)
{
    if (k.empty()) return 0.0;
    if (t <= k.front().time) return k.front().speed * (t - k.front().time);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        const double t0 = k[i].time;
        const double t1 = k[i + 1].time;
        const double slope = (k[i + 1].speed - k[i].speed) / (t1 - t0);
        const double d = std::min(t, t1) - t0;
        acc += k[i].speed * d + 0.5 * slope * d * d;
        if (t <= t1) return acc;
    }
    return acc + k.back().speed * (t - k.back().time);
}

void validate_vehicle(const VehicleSpec& v, const SceneConfig& config)
{
    v.geometry.validate();
    if (!(v.entry_time >= 0.0 && v.entry_time < config.duration()))
        throw ConfigError("vehicle entry time lies outside the time window");
    if (!(v.entry_channel >= 0.0 && v.entry_channel < static_cast<double>(config.n_channels)))
        throw ConfigError("vehicle entry channel lies outside the fiber");
    if (v.speed_profile.empty()) throw ConfigError("vehicle speed profile is empty");
    for (std::size_t i = 0; i < v.speed_profile.size(); ++i) {
        if (!std::isfinite(v.speed_profile[i].speed) || !std::isfinite(v.speed_profile[i].time))
            throw ConfigError("vehicle speed profile must be finite");
        if (std::abs(v.speed_profile[i].speed) > config.v_max)
            throw ConfigError("vehicle speed exceeds v_max");
        if (i > 0 && !(v.speed_profile[i].time > v.speed_profile[i - 1].time))
            throw ConfigError("speed profile knots must have strictly increasing times");
    }
}

} // namespace

double VehicleSpec::displacement(double t) const
{
    return travelled(speed_profile, t) - travelled(speed_profile, entry_time);
}

double channel_position(const VehicleSpec& v, double t, double channel_spacing)
{
    return v.entry_channel + v.displacement(t) / channel_spacing;
}

SceneResult simulate_clean(const SceneConfig& config, const std::vector<VehicleSpec>& vehicles)
{
    config.validate();
    for (const auto& v : vehicles) validate_vehicle(v, config);

    const std::size_t hw = config.kernel_half_width;
    std::vector<physics::ImpulseKernel> kernels;
    std::vector<double> amplitude;
    for (const auto& v : vehicles) {
        kernels.push_back(physics::sampled_kernel(v.geometry, config.physics, v.lateral_offset,
                                                  config.channel_spacing, hw));
        amplitude.push_back(v.geometry.total_force() / config.reference_force);
    }

    SceneResult out{Waterfall(config.n_channels, config.n_time, config.channel_spacing,
                              config.sample_rate),
                    GroundTruth{std::vector<std::vector<TruthPoint>>(vehicles.size())}};
    Waterfall& w = out.waterfall;
    const auto n_ch = static_cast<std::ptrdiff_t>(config.n_channels);
    const double last = static_cast<double>(config.n_channels - 1);

    for (std::size_t t = 0; t < config.n_time; ++t) {
        const double time = static_cast<double>(t) / config.sample_rate;
        for (std::size_t vi = 0; vi < vehicles.size(); ++vi) {
            const double xi = channel_position(vehicles[vi], time, config.channel_spacing);
            if (xi >= 0.0 && xi <= last) out.truth.vehicles[vi].push_back({t, xi});
            if (xi + static_cast<double>(hw) + 1.0 < 0.0 || xi - static_cast<double>(hw) > last) continue;
            const double base = std::floor(xi);
            const double frac = xi - base;
            const auto i0 = static_cast<std::ptrdiff_t>(base);
            const auto& taps = kernels[vi].taps;
            for (std::size_t j = 0; j < taps.size(); ++j) {
                const double a = amplitude[vi] * taps[j];
                const std::ptrdiff_t c = i0 + static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(hw);
                if (c >= 0 && c < n_ch) w(static_cast<std::size_t>(c), t) += (1.0 - frac) * a;
                if (c + 1 >= 0 && c + 1 < n_ch) w(static_cast<std::size_t>(c + 1), t) += frac * a;
            }
        }
    }
    return out;
}

Waterfall add_noise(const Waterfall& w, const SceneConfig& config)
{
    if (!w.all_finite()) throw NumericError("cannot add noise to a non-finite waterfall");
    if (!(config.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
    if (!(config.outlier_rate >= 0.0 && config.outlier_rate < 1.0))
        throw ConfigError("outlier rate must lie in [0, 1)");
    Waterfall out = w;
    out.normalized = false;
    std::mt19937_64 rng(config.seed);
    if (config.noise_sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, config.noise_sigma);
        for (double& v : out.values()) v += gauss(rng);
    }
    if (config.outlier_rate > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (double& v : out.values()) {
            const bool hit = unit(rng) < config.outlier_rate;
            const bool positive = unit(rng) < 0.5;
            if (hit) v = positive ? config.outlier_amp : -config.outlier_amp;
        }
    }
    return out;
}

std::vector<VehicleSpec> random_traffic(const SceneConfig& config, const TrafficSpec& traffic,
                                        std::mt19937_64& rng)
{
    if (traffic.max_vehicles < traffic.min_vehicles) throw ConfigError("max_vehicles < min_vehicles");
    std::uniform_int_distribution<std::size_t> count(traffic.min_vehicles, traffic.max_vehicles);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const std::size_t n = count(rng);
    std::vector<VehicleSpec> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double speed = between(traffic.min_speed, traffic.max_speed);
        const double entry = between(0.0, config.duration() * 0.999);
        VehicleSpec v = VehicleSpec::constant_speed(speed, entry, 0.0);
        const double force = between(traffic.min_force, traffic.max_force);
        v.geometry.wheel_weights = {force / 4, force / 4, force / 4, force / 4};
        v.lateral_offset = between(traffic.min_lateral, traffic.max_lateral);
        out.push_back(v);
    }
    return out;
}

std::vector<Waterfall> random_tiles(const SceneConfig& config, const TrafficSpec& traffic,
                                    std::size_t count, std::size_t tile_channels,
                                    std::size_t tile_time, std::uint64_t seed)
{
    config.validate();
    if (tile_channels == 0 || tile_time == 0 || tile_channels > config.n_channels
        || tile_time > config.n_time)
        throw ConfigError("tile does not fit inside the scene");
    std::mt19937_64 rng(seed);
    std::vector<Waterfall> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SceneConfig c = config;
        c.seed = rng();
        const auto vehicles = random_traffic(c, traffic, rng);
        const Waterfall noisy = add_noise(simulate_clean(c, vehicles).waterfall, c);
        const Waterfall full = normalize(noisy);
        const std::size_t c0 = rng() % (c.n_channels - tile_channels + 1);
        const std::size_t t0 = rng() % (c.n_time - tile_time + 1);
        Waterfall tile(tile_channels, tile_time, c.channel_spacing, c.sample_rate);
        tile.normalized = true;
        for (std::size_t a = 0; a < tile_channels; ++a)
            for (std::size_t k = 0; k < tile_time; ++k) tile(a, k) = full(c0 + a, t0 + k);
        out.push_back(std::move(tile));
    }
    return out;
}

void write_ground_truth(std::ostream& os, const GroundTruth& truth)
{
    for (std::size_t v = 0; v < truth.vehicles.size(); ++v) {
        os << "# vehicle " << v << '\n';
        for (const auto& p : truth.vehicles[v])
            os << p.time_index << ',' << io::format_double(p.channel) << '\n';
    }
}

} // namespace das::scene
