#include "das/physics.hpp"

#include "das/common.hpp"
#include "das/io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace das::physics {

void PhysicsParams::validate() const
{
    if (!(shear_modulus > 0.0)) throw ConfigError("shear modulus must be positive");
    if (!(poisson >= 0.0 && poisson < 0.5)) throw ConfigError("poisson ratio must lie in [0, 0.5)");
    if (!(depth > 0.0)) throw ConfigError("fiber depth must be positive");
    if (!(gauge_length > 0.0)) throw ConfigError("gauge length must be positive");
}

void VehicleGeometry::validate() const
{
    if (!(axle_length > 0.0)) throw ConfigError("axle length must be positive");
    if (!(wheelbase > 0.0)) throw ConfigError("wheelbase must be positive");
    for (double w : wheel_weights)
        if (!(w >= 0.0)) throw ConfigError("wheel weights must be non-negative");
    if (!(total_force() > 0.0)) throw ConfigError("total vehicle force must be positive");
}

double VehicleGeometry::total_force() const
{
    return wheel_weights[0] + wheel_weights[1] + wheel_weights[2] + wheel_weights[3];
}

std::array<std::array<double, 2>, 4> VehicleGeometry::wheel_offsets() const
{
    const double hb = wheelbase / 2.0;
    const double ha = axle_length / 2.0;
    return {{{hb, ha}, {hb, -ha}, {-hb, -ha}, {-hb, ha}}};
}

double deformation(double dx, double dy, const PhysicsParams& params, double force)
{
    const double dz = params.depth;
    const double r2 = dx * dx + dy * dy + dz * dz;
    if (r2 == 0.0) throw DomainError("deformation evaluated at the load point (r = 0)");
    const double r = std::sqrt(r2);
    const double ratio = dz / r;
    const double shape = dx / r2 * (ratio + (2.0 * params.poisson - 1.0) / (1.0 + ratio));
    return force / (4.0 * std::numbers::pi * params.shear_modulus) * shape;
}

double point_load_kernel(double dx, const PhysicsParams& params, double force, double dy)
{
    const double half = params.gauge_length / 2.0;
    const double diff = deformation(dx - half, dy, params, force)
                        - deformation(dx + half, dy, params, force);
    return std::abs(diff) / params.gauge_length;
}

double vehicle_kernel(double dx, const VehicleGeometry& geom, const PhysicsParams& params,
                      double dy)
{
    const double half = params.gauge_length / 2.0;
    const auto offsets = geom.wheel_offsets();
    auto summed = [&](double at) {
        double acc = 0.0;
        for (std::size_t i = 0; i < 4; ++i)
            acc += geom.wheel_weights[i]
                   * deformation(at + offsets[i][0], dy + offsets[i][1], params, 1.0);
        return acc;
    };
    const double front = summed(dx + half);
    const double rear = summed(dx - half);
    return std::abs(rear - front);
}

namespace {

template <class Fn>
ImpulseKernel sample(Fn&& fn, double channel_spacing, std::size_t half_width)
{
    if (half_width < 1) throw ConfigError("kernel half width must be at least 1");
    if (!(channel_spacing > 0.0)) throw ConfigError("channel spacing must be positive");
    ImpulseKernel k;
    k.channel_spacing = channel_spacing;
    k.taps.resize(2 * half_width + 1);
    double peak = 0.0;
    for (std::size_t j = 0; j < k.taps.size(); ++j) {
        const double dx = (static_cast<double>(j) - static_cast<double>(half_width)) * channel_spacing;
        k.taps[j] = fn(dx);
        peak = std::max(peak, std::abs(k.taps[j]));
    }
    if (!(peak > 0.0) || !std::isfinite(peak)) throw NumericError("degenerate kernel: all taps are zero");
    for (double& t : k.taps) t /= peak;
    k.normalized = true;
    return k;
}

} // namespace

ImpulseKernel sampled_kernel(const VehicleGeometry& geom, const PhysicsParams& params,
                             double dy, double channel_spacing, std::size_t half_width)
{
    params.validate();
    geom.validate();
    return sample([&](double dx) { return vehicle_kernel(dx, geom, params, dy); },
                  channel_spacing, half_width);
}

ImpulseKernel sampled_point_kernel(const PhysicsParams& params, double force, double dy,
                                   double channel_spacing, std::size_t half_width)
{
    params.validate();
    if (!(force > 0.0)) throw ConfigError("force must be positive");
    return sample([&](double dx) { return point_load_kernel(dx, params, force, dy); },
                  channel_spacing, half_width);
}

ImpulseKernel identity_kernel(double channel_spacing)
{
    return ImpulseKernel{{1.0}, channel_spacing, true};
}

void write_kernel(std::ostream& os, const ImpulseKernel& kernel)
{
    os << "# channel_spacing=" << io::format_double(kernel.channel_spacing)
       << " half_width=" << kernel.half_width()
       << " normalized=" << (kernel.normalized ? 1 : 0) << '\n';
    for (double t : kernel.taps) os << io::format_double(t) << '\n';
}

ImpulseKernel read_kernel(std::istream& is)
{
    std::string header;
    if (!std::getline(is, header)) throw io::IoError(io::IoErrorKind::Format, "empty kernel file");
    ImpulseKernel k;
    std::size_t half_width = 0;
    int normalized = 0;
    char buf[64];
    if (std::sscanf(header.c_str(), "# channel_spacing=%63s half_width=%zu normalized=%d", buf,
                    &half_width, &normalized) != 3)
        throw io::IoError(io::IoErrorKind::Format, "bad kernel header: " + header);
    k.channel_spacing = io::parse_double(buf);
    k.normalized = normalized != 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        k.taps.push_back(io::parse_double(line));
    }
    if (k.taps.size() != 2 * half_width + 1)
        throw io::IoError(io::IoErrorKind::Format, "kernel tap count does not match half_width");
    return k;
}

} // namespace das::physics
