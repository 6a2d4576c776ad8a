#include "das/config.hpp"

#include "das/common.hpp"
#include "das/io.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

namespace das::config {
namespace {

struct Field {
    std::string key;
    std::function<void(std::string_view)> set;
    std::function<std::string()> get;
};

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(std::string_view v)
{
    try {
        return io::parse_double(v);
    } catch (const Error&) {
        throw ConfigError("expected a number, got '" + std::string(v) + "'");
    }
}

template <typename T>
T to_unsigned(std::string_view v)
{
    T out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
    return out;
}

bool to_bool(std::string_view v)
{
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

Field real(std::string key, double& ref)
{
    return {std::move(key), [&ref](std::string_view v) { ref = to_double(v); },
            [&ref] { return io::format_double(ref); }};
}

Field count(std::string key, std::size_t& ref)
{
    return {std::move(key), [&ref](std::string_view v) { ref = to_unsigned<std::size_t>(v); },
            [&ref] { return std::to_string(ref); }};
}

Field seed(std::string key, std::uint64_t& ref)
{
    return {std::move(key), [&ref](std::string_view v) { ref = to_unsigned<std::uint64_t>(v); },
            [&ref] { return std::to_string(ref); }};
}

Field flag(std::string key, bool& ref)
{
    return {std::move(key), [&ref](std::string_view v) { ref = to_bool(v); },
            [&ref] { return std::string(ref ? "true" : "false"); }};
}

Field wheel_weights(physics::VehicleGeometry& g)
{
    return {"wheel_weights",
            [&g](std::string_view v) {
                const auto parts = split(v, ',');
                if (parts.size() == 1) {
                    g.wheel_weights.fill(to_double(parts[0]));
                } else if (parts.size() == 4) {
                    for (std::size_t i = 0; i < 4; ++i) g.wheel_weights[i] = to_double(parts[i]);
                } else {
                    throw ConfigError("wheel_weights takes one value or four comma-separated values");
                }
            },
            [&g] {
                std::string s;
                for (std::size_t i = 0; i < 4; ++i) {
                    if (i) s += ',';
                    s += io::format_double(g.wheel_weights[i]);
                }
                return s;
            }};
}

std::vector<Field> physics_fields(physics::PhysicsParams& p)
{
    return {real("shear_modulus", p.shear_modulus), real("poisson", p.poisson),
            real("depth", p.depth), real("gauge_length", p.gauge_length)};
}

std::vector<Field> fields_for(PipelineConfig& c, const std::string& section)
{
    if (section == "scene") {
        auto& s = c.scene;
        return {count("n_channels", s.n_channels), count("n_time", s.n_time),
                real("channel_spacing", s.channel_spacing), real("sample_rate", s.sample_rate),
                count("kernel_half_width", s.kernel_half_width),
                real("reference_force", s.reference_force), real("v_max", s.v_max),
                real("noise_sigma", s.noise_sigma), real("outlier_rate", s.outlier_rate),
                real("outlier_amp", s.outlier_amp), seed("seed", s.seed)};
    }
    if (section == "physics") return physics_fields(c.scene.physics);
    if (section == "kernel") {
        auto& k = c.kernel;
        return {real("axle_length", k.geometry.axle_length), real("wheelbase", k.geometry.wheelbase),
                wheel_weights(k.geometry), real("lateral_offset", k.lateral_offset),
                count("half_width", k.half_width), flag("point_load", k.point_load),
                real("point_force", k.point_force)};
    }
    if (section == "vehicle") {
        if (c.vehicles.empty()) c.vehicles.emplace_back();
        auto& v = c.vehicles.back();
        Field speed{"speed",
                    [&v](std::string_view s) { v.speed_profile = {{0.0, to_double(s)}}; },
                    [&v] { return io::format_double(v.speed_profile.front().speed); }};
        Field knots{"speed_knots",
                    [&v](std::string_view s) {
                        std::vector<scene::SpeedKnot> out;
                        for (auto part : split(s, ',')) {
                            const auto colon = part.find(':');
                            if (colon == std::string_view::npos)
                                throw ConfigError("speed_knots entries are time:speed");
                            out.push_back({to_double(trim(part.substr(0, colon))),
                                           to_double(trim(part.substr(colon + 1)))});
                        }
                        v.speed_profile = std::move(out);
                    },
                    [&v] {
                        std::string s;
                        for (std::size_t i = 0; i < v.speed_profile.size(); ++i) {
                            if (i) s += ',';
                            s += io::format_double(v.speed_profile[i].time) + ":"
                                + io::format_double(v.speed_profile[i].speed);
                        }
                        return s;
                    }};
        return {real("entry_time", v.entry_time), real("entry_channel", v.entry_channel),
                real("lateral_offset", v.lateral_offset), std::move(speed), std::move(knots),
                real("axle_length", v.geometry.axle_length), real("wheelbase", v.geometry.wheelbase),
                wheel_weights(v.geometry)};
    }
    if (section == "traffic") {
        auto& t = c.traffic;
        return {count("min_vehicles", t.min_vehicles), count("max_vehicles", t.max_vehicles),
                real("min_speed", t.min_speed), real("max_speed", t.max_speed),
                real("min_force", t.min_force), real("max_force", t.max_force),
                real("min_lateral", t.min_lateral), real("max_lateral", t.max_lateral)};
    }
    if (section == "lasso") {
        auto& l = c.lasso;
        return {real("lambda", l.lambda), count("max_iter", l.max_iter), real("tol", l.tol),
                flag("accelerated", l.accelerated), count("threads", l.threads)};
    }
    if (section == "net") {
        auto& n = c.net;
        Field axis{"lstm_axis",
                   [&n](std::string_view v) {
                       if (v == "channel") n.lstm_axis = hdl::LstmAxis::Channel;
                       else if (v == "time") n.lstm_axis = hdl::LstmAxis::Time;
                       else throw ConfigError("lstm_axis is channel or time, got '" + std::string(v) + "'");
                   },
                   [&n] { return std::string(n.lstm_axis == hdl::LstmAxis::Channel ? "channel" : "time"); }};
        return {count("input_channels", n.input_channels), count("input_time", n.input_time),
                count("base_channels", n.base_channels), count("depth", n.depth),
                count("conv_h", n.conv_h), count("conv_w", n.conv_w), count("pool_h", n.pool_h),
                count("pool_w", n.pool_w), count("lstm_units", n.lstm_units),
                count("dense_width", n.dense_width), std::move(axis)};
    }
    if (section == "train") {
        auto& t = c.train;
        return {real("learning_rate", t.learning_rate), count("batch_size", t.batch_size),
                count("epochs", t.epochs), real("lambda_l1", t.lambda_l1),
                real("noise_variance", t.noise_variance), seed("seed", t.seed),
                real("validation_fraction", t.validation_fraction), real("beta1", t.beta1),
                real("beta2", t.beta2), real("epsilon", t.epsilon), count("threads", t.threads)};
    }
    if (section == "tracker") {
        auto& t = c.tracker;
        Field dir{"direction",
                  [&t](std::string_view v) {
                      if (v == "forward") t.direction = tracker::Direction::Forward;
                      else if (v == "reverse") t.direction = tracker::Direction::Reverse;
                      else throw ConfigError("direction is forward or reverse, got '" + std::string(v) + "'");
                  },
                  [&t] { return std::string(t.direction == tracker::Direction::Forward ? "forward" : "reverse"); }};
        return {real("v_min_init", t.v_min_init), real("v_max_init", t.v_max_init),
                real("confidence", t.confidence), count("fit_window", t.fit_window),
                count("poly_degree", t.poly_degree), real("peak_threshold_k", t.peak_threshold_k),
                count("peak_min_separation", t.peak_min_separation),
                count("initial_rows", t.initial_rows), std::move(dir)};
    }
    if (section == "ssim") {
        auto& s = c.ssim;
        // A new dynamic range resets the stabilizers to their standard values.
        Field range{"dynamic_range",
                    [&s](std::string_view v) {
                        const auto d = metrics::SsimConfig::for_range(to_double(v), s.window);
                        s.dynamic_range = d.dynamic_range;
                        s.c1 = d.c1;
                        s.c2 = d.c2;
                        s.c3 = d.c3;
                    },
                    [&s] { return io::format_double(s.dynamic_range); }};
        return {real("alpha", s.alpha), real("beta", s.beta), real("gamma", s.gamma),
                std::move(range), real("c1", s.c1), real("c2", s.c2), real("c3", s.c3),
                count("window", s.window)};
    }
    if (section == "eval") return {real("peak_v", c.peak_v)};
    throw ConfigError("unknown section [" + section + "]");
}

void assign(PipelineConfig& c, const std::string& section, std::string_view key,
            std::string_view value)
{
    auto fields = fields_for(c, section);
    for (auto& f : fields) {
        if (f.key != key) continue;
        try {
            f.set(value);
        } catch (const ConfigError& e) {
            throw ConfigError("bad value for " + section + "." + std::string(key) + ": " + e.what());
        }
        return;
    }
    throw ConfigError("unknown key '" + std::string(key) + "' in section [" + section + "]");
}

} // namespace

const std::vector<std::string>& known_sections()
{
    static const std::vector<std::string> s{"scene", "physics", "kernel", "vehicle", "traffic",
                                            "lasso", "net",     "train",  "tracker", "ssim", "eval"};
    return s;
}

physics::ImpulseKernel PipelineConfig::build_kernel() const
{
    if (kernel.point_load)
        return physics::sampled_point_kernel(scene.physics, kernel.point_force,
                                             kernel.lateral_offset, scene.channel_spacing,
                                             kernel.half_width);
    return physics::sampled_kernel(kernel.geometry, scene.physics, kernel.lateral_offset,
                                   scene.channel_spacing, kernel.half_width);
}

void PipelineConfig::validate() const
{
    scene.validate();
    kernel.geometry.validate();
    for (const auto& v : vehicles) v.geometry.validate();
    lasso.validate();
    net.validate();
    train.validate();
    tracker.validate();
    ssim.validate();
    if (!std::isnan(peak_v) && !(peak_v > 0.0)) throw ConfigError("peak_v must be positive");
    if (traffic.min_vehicles > traffic.max_vehicles)
        throw ConfigError("traffic.min_vehicles exceeds traffic.max_vehicles");
}

PipelineConfig parse(std::string_view text, PipelineConfig base)
{
    PipelineConfig c = std::move(base);
    std::string section;
    bool base_vehicles = !c.vehicles.empty();
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = " (line " + std::to_string(line_no) + ")";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header" + where);
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (std::find(known_sections().begin(), known_sections().end(), section)
                == known_sections().end())
                throw ConfigError("unknown section [" + section + "]" + where);
            if (section == "vehicle") {
                // Vehicles in the text replace those inherited from the base.
                if (base_vehicles) {
                    c.vehicles.clear();
                    base_vehicles = false;
                }
                c.vehicles.emplace_back();
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected key = value" + where);
        if (section.empty()) throw ConfigError("key outside of any [section]" + where);
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        try {
            assign(c, section, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + where);
        }
    }
    return c;
}

PipelineConfig load_file(const std::filesystem::path& path, PipelineConfig base)
{
    return parse(io::read_file(path), std::move(base));
}

void set_value(PipelineConfig& config, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq)
        throw ConfigError("override must look like section.key=value, got '"
                          + std::string(assignment) + "'");
    const std::string section(trim(assignment.substr(0, dot)));
    if (std::find(known_sections().begin(), known_sections().end(), section)
        == known_sections().end())
        throw ConfigError("unknown section [" + section + "]");
    assign(config, section, trim(assignment.substr(dot + 1, eq - dot - 1)),
           trim(assignment.substr(eq + 1)));
}

std::string dump(const PipelineConfig& config)
{
    PipelineConfig c = config;
    std::ostringstream os;
    auto emit = [&](const std::string& section) {
        os << '[' << section << "]\n";
        for (const auto& f : fields_for(c, section))
            if (!(section == "vehicle" && f.key == "speed")) os << f.key << " = " << f.get() << '\n';
        os << '\n';
    };
    for (const auto& s : known_sections()) {
        if (s == "vehicle") continue;
        emit(s);
    }
    // fields_for("vehicle") binds the last vehicle; emit each in turn.
    for (std::size_t i = 0; i < config.vehicles.size(); ++i) {
        c.vehicles.assign(config.vehicles.begin(), config.vehicles.begin() + static_cast<long>(i) + 1);
        emit("vehicle");
    }
    return os.str();
}

} // namespace das::config
