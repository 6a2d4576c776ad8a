#include "das/waterfall.hpp"

#include "das/common.hpp"

#include <algorithm>
#include <cmath>

namespace das {

Waterfall::Waterfall(std::size_t n_channels, std::size_t n_time, double channel_spacing_m,
                     double sample_rate_hz)
    : channel_spacing(channel_spacing_m),
      sample_rate(sample_rate_hz),
      n_channels_(n_channels),
      n_time_(n_time),
      values_(n_channels * n_time, 0.0)
{
}

std::vector<double> Waterfall::column(std::size_t t) const
{
    std::vector<double> out(n_channels_);
    for (std::size_t c = 0; c < n_channels_; ++c) out[c] = values_[c * n_time_ + t];
    return out;
}

void Waterfall::set_column(std::size_t t, std::span<const double> profile)
{
    for (std::size_t c = 0; c < n_channels_; ++c) values_[c * n_time_ + t] = profile[c];
}

bool Waterfall::all_finite() const
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

NormalizationMap fit_normalization(const Waterfall& w)
{
    if (w.size() == 0) return {};
    const auto [lo, hi] = std::minmax_element(w.values().begin(), w.values().end());
    return {*lo, *hi - *lo};
}

Waterfall apply_normalization(const Waterfall& w, const NormalizationMap& map)
{
    Waterfall out = w;
    for (double& v : out.values()) v = map.scale > 0.0 ? (v - map.offset) / map.scale : 0.0;
    out.normalized = std::all_of(out.values().begin(), out.values().end(),
                                 [](double v) { return v >= 0.0 && v <= 1.0; });
    return out;
}

Waterfall normalize(const Waterfall& w)
{
    if (!w.all_finite()) throw NumericError("cannot normalize a waterfall with non-finite values");
    Waterfall out = apply_normalization(w, fit_normalization(w));
    // Pin the extremes so rounding in (v - lo) / (hi - lo) cannot leave [0, 1].
    for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
    return out;
}

} // namespace das
