#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace das {

/// Channel x time amplitude matrix (row = sensor channel, column = time sample).
class Waterfall {
public:
    Waterfall() = default;
    Waterfall(std::size_t n_channels, std::size_t n_time, double channel_spacing = 0.8,
              double sample_rate = 11.0);

    std::size_t n_channels() const { return n_channels_; }
    std::size_t n_time() const { return n_time_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t channel, std::size_t t) { return values_[channel * n_time_ + t]; }
    double operator()(std::size_t channel, std::size_t t) const { return values_[channel * n_time_ + t]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    std::span<double> channel_row(std::size_t channel)
    {
        return {values_.data() + channel * n_time_, n_time_};
    }
    std::span<const double> channel_row(std::size_t channel) const
    {
        return {values_.data() + channel * n_time_, n_time_};
    }

    /// Copies the spatial profile (all channels) at one time sample.
    std::vector<double> column(std::size_t t) const;
    void set_column(std::size_t t, std::span<const double> profile);

    double channel_spacing = 0.8; ///< [m]
    double sample_rate = 11.0;    ///< [Hz]
    bool normalized = false;

    bool same_shape(const Waterfall& other) const
    {
        return n_channels_ == other.n_channels_ && n_time_ == other.n_time_;
    }
    bool all_finite() const;

private:
    std::size_t n_channels_ = 0;
    std::size_t n_time_ = 0;
    std::vector<double> values_;
};

/// Affine map v -> (v - offset) / scale used by normalize().
struct NormalizationMap {
    double offset = 0.0;
    double scale = 1.0; ///< zero marks a constant source; everything maps to 0
};

NormalizationMap fit_normalization(const Waterfall& w);
Waterfall apply_normalization(const Waterfall& w, const NormalizationMap& map);

/// Min-max normalization to [0, 1]; a constant input maps to all zeros.
Waterfall normalize(const Waterfall& w);

} // namespace das
