#pragma once

#include "das/waterfall.hpp"

#include <cstddef>
#include <iosfwd>
#include <limits>

namespace das::metrics {

struct SsimConfig {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double dynamic_range = 1.0; ///< L
    double c1 = 1e-4;           ///< (0.01 L)^2
    double c2 = 9e-4;           ///< (0.03 L)^2
    double c3 = 4.5e-4;         ///< c2 / 2
    std::size_t window = 8;     ///< side of the square sliding window

    /// Standard constants derived from the dynamic range.
    static SsimConfig for_range(double dynamic_range, std::size_t window = 8);
    void validate() const;
};

struct QualityReport {
    double mse = 0.0;
    double psnr = 0.0; ///< dB; +infinity when mse == 0
    double ssim = 0.0;
};

inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

double mse(const Waterfall& y, const Waterfall& y_hat);
double psnr_from_mse(double mse, double peak);
double psnr(const Waterfall& y, const Waterfall& y_hat, double peak);

/// Luminance, contrast and structure terms of one window pair.
struct SsimTerms {
    double luminance = 1.0;
    double contrast = 1.0;
    double structure = 1.0;
};

SsimTerms ssim_terms(double mean_a, double mean_b, double var_a, double var_b, double cov,
                     const SsimConfig& config);
double combine(const SsimTerms& terms, const SsimConfig& config);

/// Mean over every fully contained window position of l^a * c^b * s^g.
double ssim(const Waterfall& y, const Waterfall& y_hat, const SsimConfig& config);

QualityReport evaluate(const Waterfall& reference, const Waterfall& candidate, double peak,
                       const SsimConfig& config);

/// key=value lines: mse, psnr_db, ssim, then the SSIM settings used.
void write_report(std::ostream& os, const QualityReport& report, double peak,
                  const SsimConfig& config);

} // namespace das::metrics
