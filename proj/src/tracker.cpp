#include "das/tracker.hpp"

#include "das/common.hpp"
#include "das/io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace das::tracker {

void TrackerConfig::validate() const
{
    if (!(v_min_init > 0.0 && v_min_init < v_max_init))
        throw ConfigError("initial speed interval needs 0 < v_min < v_max");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
    if (fit_window < 2) throw ConfigError("fit window must hold at least 2 points");
    if (poly_degree < 1) throw ConfigError("polynomial degree must be at least 1");
    if (!(peak_threshold_k >= 0.0)) throw ConfigError("peak threshold must be non-negative");
    if (initial_rows < 1) throw ConfigError("initial_rows must be at least 1");
}

namespace {

// Waterfall seen in travel coordinates: oriented channel 0 is the entry end.
struct Oriented {
    const Waterfall& d;
    bool reversed;

    std::size_t n_channels() const { return d.n_channels(); }
    std::size_t to_data(std::size_t c) const { return reversed ? d.n_channels() - 1 - c : c; }
    double at(std::size_t row, std::size_t c) const { return d(to_data(c), row); }
};

// Appends the argmax of row (last.time + 1) over oriented channels
// [l + lo, l + hi]; false when the trajectory has reached an edge.
bool extend_once(const Oriented& view, Trajectory& traj, ChannelWindow window)
{
    const TrackPoint last = traj.points.back();
    const std::size_t row = last.time + 1;
    if (row >= view.d.n_time()) return false;
    const long n = static_cast<long>(view.n_channels());
    const long here = static_cast<long>(view.to_data(last.channel)); // involution: data -> oriented
    const long lo = std::max(here + window.lo, 0L);
    const long hi = std::min(here + window.hi, n - 1);
    if (lo > hi) return false;
    long best = lo;
    double best_v = view.at(row, static_cast<std::size_t>(lo));
    for (long c = lo + 1; c <= hi; ++c) {
        const double v = view.at(row, static_cast<std::size_t>(c));
        if (v > best_v) {
            best_v = v;
            best = c;
        }
    }
    traj.points.push_back({row, view.to_data(static_cast<std::size_t>(best))});
    return best < n - 1;
}

std::vector<TrackPoint> oriented_points(const Oriented& view, std::span<const TrackPoint> pts)
{
    std::vector<TrackPoint> out(pts.begin(), pts.end());
    for (auto& p : out) p.channel = view.to_data(p.channel); // to_data is an involution
    return out;
}

} // namespace

ChannelWindow speed_window(double v_lo, double v_hi, double channel_spacing, double sample_rate)
{
    const double per_row = 1.0 / (channel_spacing * sample_rate);
    const double a = std::min(v_lo, v_hi) * per_row;
    const double b = std::max(v_lo, v_hi) * per_row;
    ChannelWindow w{static_cast<long>(std::floor(a)), static_cast<long>(std::ceil(b))};
    if (w.hi < w.lo) w.hi = w.lo;
    return w;
}

std::vector<std::size_t> find_peaks(std::span<const double> s, const TrackerConfig& config)
{
    std::vector<std::size_t> accepted;
    const std::size_t n = s.size();
    if (n < 3) throw ConfigError("peak search needs at least 3 samples");
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    const double threshold = mean + config.peak_threshold_k * std::sqrt(var / static_cast<double>(n));

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i == 0 || s[i] > s[i - 1];
        const bool right = i + 1 == n || s[i] > s[i + 1];
        if (s[i] > threshold && left && right) candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    for (std::size_t c : candidates) {
        const bool clear = std::all_of(accepted.begin(), accepted.end(), [&](std::size_t a) {
            const std::size_t gap = a > c ? a - c : c - a;
            return gap >= config.peak_min_separation;
        });
        if (clear) accepted.push_back(c);
    }
    std::sort(accepted.begin(), accepted.end());
    return accepted;
}

double end_slope(std::span<const TrackPoint> points, std::size_t degree)
{
    if (points.size() < 2) throw ConfigError("slope needs at least two points");
    const std::size_t p = std::min(degree, points.size() - 1) + 1;
    const double t_end = static_cast<double>(points.back().time);
    // Normal equations in u = t - t_end; the slope at the end is coefficient 1.
    std::vector<double> a(p * p, 0.0), b(p, 0.0);
    for (const auto& pt : points) {
        const double u = static_cast<double>(pt.time) - t_end;
        std::vector<double> pw(2 * p, 1.0);
        for (std::size_t k = 1; k < pw.size(); ++k) pw[k] = pw[k - 1] * u;
        for (std::size_t r = 0; r < p; ++r) {
            b[r] += pw[r] * static_cast<double>(pt.channel);
            for (std::size_t c = 0; c < p; ++c) a[r * p + c] += pw[r + c];
        }
    }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::abs(a[r * p + col]) > std::abs(a[piv * p + col])) piv = r;
        if (std::abs(a[piv * p + col]) < 1e-12) throw NumericError("singular polynomial fit");
        if (piv != col) {
            for (std::size_t c = 0; c < p; ++c) std::swap(a[col * p + c], a[piv * p + c]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < p; ++r) {
            const double f = a[r * p + col] / a[col * p + col];
            for (std::size_t c = col; c < p; ++c) a[r * p + c] -= f * a[col * p + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(p, 0.0);
    for (std::size_t r = p; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < p; ++c) acc -= a[r * p + c] * x[c];
        x[r] = acc / a[r * p + r];
    }
    return x[1];
}

Trajectory initial_extend(const Waterfall& d, std::size_t entry_row, const TrackerConfig& config)
{
    config.validate();
    if (entry_row >= d.n_time()) throw ConfigError("entry row outside the waterfall");
    const Oriented view{d, config.direction == Direction::Reverse};
    Trajectory traj;
    traj.points.push_back({entry_row, view.to_data(0)});
    const ChannelWindow window =
        speed_window(config.v_min_init, config.v_max_init, d.channel_spacing, d.sample_rate);
    for (std::size_t i = 0; i < config.initial_rows; ++i)
        if (!extend_once(view, traj, window)) break;
    return traj;
}

Trajectory adaptive_extend(const Waterfall& d, Trajectory traj, const TrackerConfig& config)
{
    config.validate();
    if (traj.points.size() < 2) throw ConfigError("adaptive extension needs at least two points");
    const Oriented view{d, config.direction == Direction::Reverse};
    const double sign = view.reversed ? -1.0 : 1.0;
    const double to_speed = d.channel_spacing * d.sample_rate;

    // A track that already ended on the far edge stays ended.
    if (view.to_data(traj.points.back().channel) == d.n_channels() - 1) return traj;

    while (true) {
        const std::size_t take = std::min(config.fit_window, traj.points.size());
        const auto tail = oriented_points(
            view, std::span<const TrackPoint>(traj.points).last(take));
        const bool flat = std::all_of(tail.begin(), tail.end(), [&](const TrackPoint& p) {
            return p.channel == tail.front().channel;
        });
        const double slope = flat ? 0.0 : end_slope(tail, config.poly_degree);
        const double v = slope * to_speed;
        ChannelWindow window = speed_window((1.0 - config.confidence) * v,
                                            (1.0 + config.confidence) * v, d.channel_spacing,
                                            d.sample_rate);
        if (window.lo == 0 && window.hi == 0) window = {-1, 1};
        const std::size_t before = traj.points.size();
        const bool more = extend_once(view, traj, window);
        if (traj.points.size() > before) traj.fitted_speed_per_step.push_back(sign * v);
        if (!more) break;
    }
    return traj;
}

std::vector<Trajectory> extract_trajectories(const Waterfall& d, const TrackerConfig& config)
{
    config.validate();
    std::vector<Trajectory> out;
    if (d.n_time() < 3) return out;
    const std::size_t entry_channel =
        config.direction == Direction::Reverse ? d.n_channels() - 1 : 0;
    const auto peaks = find_peaks(d.channel_row(entry_channel), config);
    for (std::size_t s = 0; s < peaks.size(); ++s) {
        Trajectory traj = initial_extend(d, peaks[s], config);
        if (traj.points.size() >= 2) traj = adaptive_extend(d, std::move(traj), config);
        traj.id = s;
        traj.average_speed = traj.points.size() >= 2
                                 ? estimate_speeds(traj, d.channel_spacing, d.sample_rate).average
                                 : std::numeric_limits<double>::quiet_NaN();
        out.push_back(std::move(traj));
    }
    return out;
}

SpeedEstimate estimate_speeds(const Trajectory& trajectory, double channel_spacing,
                              double sample_rate)
{
    const auto& p = trajectory.points;
    if (p.size() < 2) throw NumericError("speed is undefined for a single-point trajectory");
    SpeedEstimate e;
    e.per_step.reserve(p.size() - 1);
    for (std::size_t i = 1; i < p.size(); ++i) {
        const double dl = static_cast<double>(p[i].channel) - static_cast<double>(p[i - 1].channel);
        const double dk = static_cast<double>(p[i].time) - static_cast<double>(p[i - 1].time);
        e.per_step.push_back(dl * channel_spacing * sample_rate / dk);
    }
    const double span_l = static_cast<double>(p.back().channel) - static_cast<double>(p.front().channel);
    const double span_k = static_cast<double>(p.back().time) - static_cast<double>(p.front().time);
    e.average = span_l * channel_spacing / (span_k / sample_rate);
    return e;
}

void write_trajectories(std::ostream& os, const std::vector<Trajectory>& trajectories,
                        double channel_spacing, double sample_rate)
{
    for (const auto& t : trajectories) {
        std::vector<double> per_step;
        double average = std::numeric_limits<double>::quiet_NaN();
        if (t.points.size() >= 2) {
            const auto e = estimate_speeds(t, channel_spacing, sample_rate);
            per_step = e.per_step;
            average = e.average;
        }
        os << "# vehicle " << t.id << " avg_speed=" << io::format_double(average) << '\n';
        for (std::size_t i = 0; i < t.points.size(); ++i) {
            // Speed of the step arriving at this point; the entry point takes the first step's.
            double v = std::numeric_limits<double>::quiet_NaN();
            if (!per_step.empty()) v = per_step[i == 0 ? 0 : i - 1];
            os << t.points[i].time << ',' << t.points[i].channel << ',' << io::format_double(v) << '\n';
        }
    }
}

std::vector<Trajectory> read_trajectories(std::istream& is)
{
    std::vector<Trajectory> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("# vehicle ", 0) == 0) {
            Trajectory t;
            std::istringstream hs(line.substr(10));
            std::string avg;
            hs >> t.id >> avg;
            if (avg.rfind("avg_speed=", 0) != 0)
                throw io::IoError(io::IoErrorKind::Format, "bad trajectory header: " + line);
            t.average_speed = io::parse_double(avg.substr(10));
            out.push_back(std::move(t));
            continue;
        }
        if (out.empty()) throw io::IoError(io::IoErrorKind::Format, "trajectory row before header");
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw io::IoError(io::IoErrorKind::Format, "bad trajectory row: " + line);
        TrackPoint p;
        p.time = static_cast<std::size_t>(io::parse_double(line.substr(0, c1)));
        p.channel = static_cast<std::size_t>(io::parse_double(line.substr(c1 + 1, c2 - c1 - 1)));
        out.back().points.push_back(p);
    }
    return out;
}

} // namespace das::tracker
