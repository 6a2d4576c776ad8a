#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace das::physics {

/// Elastic half-space and fiber installation constants.
struct PhysicsParams {
    double shear_modulus = 2.0e7; ///< G [Pa]
    double poisson = 0.25;        ///< nu
    double depth = 0.075;         ///< fiber burial depth d_z [m]
    double gauge_length = 0.8;    ///< DAS gauge length l [m]

    void validate() const;
};

/// Four-wheel vehicle footprint. Wheel order: left-front, right-front,
/// right-rear, left-rear.
struct VehicleGeometry {
    double axle_length = 1.6; ///< a, lateral distance between wheels [m]
    double wheelbase = 2.7;   ///< b, front-to-rear axle distance [m]
    std::array<double, 4> wheel_weights{3750.0, 3750.0, 3750.0, 3750.0}; ///< [N]

    void validate() const;
    double total_force() const;
    /// (alpha_i, beta_i) wheel offsets relative to the vehicle center.
    std::array<std::array<double, 2>, 4> wheel_offsets() const;
};

struct ImpulseKernel {
    std::vector<double> taps;
    double channel_spacing = 0.8;
    bool normalized = false;

    std::size_t center() const { return (taps.size() - 1) / 2; }
    std::size_t half_width() const { return center(); }
};

/// Quasi-static surface-load deformation at offset (dx, dy) from the load,
/// evaluated at the fiber depth. Linear in force.
double deformation(double dx, double dy, const PhysicsParams& params, double force);

/// Gauge-length differenced response to a single point load.
double point_load_kernel(double dx, const PhysicsParams& params, double force, double dy);

/// Gauge-length differenced response to a four-wheel vehicle; each wheel
/// contributes a unit-force deformation scaled by its weight.
double vehicle_kernel(double dx, const VehicleGeometry& geom, const PhysicsParams& params,
                      double dy);

/// Samples vehicle_kernel on the channel grid and normalizes to unit peak.
ImpulseKernel sampled_kernel(const VehicleGeometry& geom, const PhysicsParams& params,
                             double dy, double channel_spacing, std::size_t half_width);

/// Same as sampled_kernel but using the single point-load form.
ImpulseKernel sampled_point_kernel(const PhysicsParams& params, double force, double dy,
                                   double channel_spacing, std::size_t half_width);

/// Single-tap unit kernel.
ImpulseKernel identity_kernel(double channel_spacing = 0.8);

// Text form: header line then one tap per line.
void write_kernel(std::ostream& os, const ImpulseKernel& kernel);
ImpulseKernel read_kernel(std::istream& is);

} // namespace das::physics
