#pragma once

#include "das/waterfall.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace das::tracker {

enum class Direction {
    Forward, ///< vehicles enter at channel 0 and move toward higher channels
    Reverse, ///< vehicles enter at the last channel and move toward channel 0
};

struct TrackerConfig {
    double v_min_init = 10.0; ///< [m/s]
    double v_max_init = 35.0; ///< [m/s]
    double confidence = 0.25; ///< cof: half-width of the speed band as a fraction
    std::size_t fit_window = 10;
    std::size_t poly_degree = 1;
    double peak_threshold_k = 3.0;
    std::size_t peak_min_separation = 5;
    /// Rows extended with the initial speed interval before switching to the
    /// polynomial-fit window.
    std::size_t initial_rows = 1;
    Direction direction = Direction::Forward;

    void validate() const;
};

struct TrackPoint {
    std::size_t time = 0;    ///< row k (time sample)
    std::size_t channel = 0; ///< column l (sensor channel)

    bool operator==(const TrackPoint&) const = default;
};

struct Trajectory {
    std::size_t id = 0;
    std::vector<TrackPoint> points;
    std::vector<double> fitted_speed_per_step; ///< [m/s] speed used to place each adaptive point
    double average_speed = 0.0;                ///< [m/s]; NaN for single-point tracks
};

struct SpeedEstimate {
    double average = 0.0;
    std::vector<double> per_step;
};

/// Channel offsets [lo, hi] reachable in one row at speeds in [v_lo, v_hi].
struct ChannelWindow {
    long lo = 0;
    long hi = 0;
};

ChannelWindow speed_window(double v_lo, double v_hi, double channel_spacing, double sample_rate);

/// Entry rows in a time series: above mean + k*std, strict local maxima, and
/// at least peak_min_separation rows apart (greedy by descending amplitude).
std::vector<std::size_t> find_peaks(std::span<const double> series, const TrackerConfig& config);

/// Starts at (entry_row, first channel) and extends with the initial speed window.
Trajectory initial_extend(const Waterfall& d, std::size_t entry_row, const TrackerConfig& config);

/// Extends a trajectory of at least two points with the polynomial-slope window.
Trajectory adaptive_extend(const Waterfall& d, Trajectory trajectory, const TrackerConfig& config);

std::vector<Trajectory> extract_trajectories(const Waterfall& d, const TrackerConfig& config);

SpeedEstimate estimate_speeds(const Trajectory& trajectory, double channel_spacing,
                              double sample_rate);

/// End slope (channels per row) of a least-squares polynomial through the points.
double end_slope(std::span<const TrackPoint> points, std::size_t degree);

void write_trajectories(std::ostream& os, const std::vector<Trajectory>& trajectories,
                        double channel_spacing, double sample_rate);
std::vector<Trajectory> read_trajectories(std::istream& is);

} // namespace das::tracker
