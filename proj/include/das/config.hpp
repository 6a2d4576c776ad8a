#pragma once

#include "das/hdlnet/network.hpp"
#include "das/hdlnet/training.hpp"
#include "das/lasso.hpp"
#include "das/metrics.hpp"
#include "das/physics.hpp"
#include "das/scenegen.hpp"
#include "das/tracker.hpp"

#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace das::config {

/// Vehicle and installation used to build the denoising kernel.
struct KernelConfig {
    physics::VehicleGeometry geometry{};
    double lateral_offset = 4.0; ///< d_y [m]
    std::size_t half_width = 20;
    bool point_load = false;     ///< single point load of force `point_force` instead
    double point_force = 1.5e4;  ///< [N]
};

/// Every module's settings. Text form is `key = value` lines under
/// `[section]` headers; `#` starts a comment. `[vehicle]` may repeat.
struct PipelineConfig {
    scene::SceneConfig scene{};
    scene::TrafficSpec traffic{};
    std::vector<scene::VehicleSpec> vehicles;
    KernelConfig kernel{};
    lasso::LassoConfig lasso{};
    hdl::NetConfig net = hdl::NetConfig::toy();
    hdl::TrainConfig train{};
    tracker::TrackerConfig tracker{};
    metrics::SsimConfig ssim{};
    /// PSNR peak value. Unset (NaN) by default; evaluation requires it.
    double peak_v = std::numeric_limits<double>::quiet_NaN();

    physics::ImpulseKernel build_kernel() const;
    void validate() const;
};

/// Sections and keys the parser accepts.
const std::vector<std::string>& known_sections();

/// Parses text on top of `base`. Unknown sections or keys and malformed
/// values raise ConfigError naming the offending key and line.
PipelineConfig parse(std::string_view text, PipelineConfig base = {});
PipelineConfig load_file(const std::filesystem::path& path, PipelineConfig base = {});

/// Applies `section.key=value`. Vehicle keys address the last vehicle block,
/// creating one if there is none.
void set_value(PipelineConfig& config, std::string_view assignment);

/// Fully resolved text form; parse(dump(c)) reproduces c.
std::string dump(const PipelineConfig& config);

} // namespace das::config
