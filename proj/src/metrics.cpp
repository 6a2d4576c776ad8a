#include "das/metrics.hpp"

#include "das/common.hpp"
#include "das/io.hpp"

#include <cmath>
#include <ostream>
#include <vector>

namespace das::metrics {

SsimConfig SsimConfig::for_range(double dynamic_range, std::size_t window)
{
    SsimConfig c;
    c.dynamic_range = dynamic_range;
    c.c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
    c.c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
    c.c3 = c.c2 / 2.0;
    c.window = window;
    return c;
}

void SsimConfig::validate() const
{
    if (!(c1 > 0.0 && c2 > 0.0 && c3 > 0.0)) throw ConfigError("ssim constants must be positive");
    if (window < 3) throw ConfigError("ssim window must be at least 3");
    if (!(alpha > 0.0 && beta > 0.0 && gamma > 0.0)) throw ConfigError("ssim exponents must be positive");
}

namespace {

void require_same_shape(const Waterfall& a, const Waterfall& b)
{
    if (!a.same_shape(b)) throw ConfigError("dimension mismatch between compared waterfalls");
}

// Sign-preserving power so negative structure terms survive fractional exponents.
double signed_pow(double base, double e)
{
    if (e == 1.0) return base;
    return std::copysign(std::pow(std::abs(base), e), base);
}

} // namespace

double mse(const Waterfall& y, const Waterfall& y_hat)
{
    require_same_shape(y, y_hat);
    if (y.size() == 0) throw ConfigError("cannot score empty waterfalls");
    double acc = 0.0;
    const auto a = y.values();
    const auto b = y_hat.values();
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double mse_value, double peak)
{
    if (!(peak > 0.0)) throw ConfigError("psnr peak value must be positive");
    if (mse_value == 0.0) return kPsnrInfinite;
    return 10.0 * std::log10(peak * peak / mse_value);
}

double psnr(const Waterfall& y, const Waterfall& y_hat, double peak)
{
    return psnr_from_mse(mse(y, y_hat), peak);
}

SsimTerms ssim_terms(double mean_a, double mean_b, double var_a, double var_b, double cov,
                     const SsimConfig& c)
{
    // sqrt(va * vb) rather than sqrt(va) * sqrt(vb): exact when va == vb.
    const double sd_ab = std::sqrt(std::max(var_a, 0.0) * std::max(var_b, 0.0));
    SsimTerms t;
    t.luminance = (2.0 * mean_a * mean_b + c.c1) / (mean_a * mean_a + mean_b * mean_b + c.c1);
    t.contrast = (2.0 * sd_ab + c.c2) / (var_a + var_b + c.c2);
    t.structure = (cov + c.c3) / (sd_ab + c.c3);
    return t;
}

double combine(const SsimTerms& t, const SsimConfig& c)
{
    return signed_pow(t.luminance, c.alpha) * signed_pow(t.contrast, c.beta)
           * signed_pow(t.structure, c.gamma);
}

double ssim(const Waterfall& y, const Waterfall& y_hat, const SsimConfig& config)
{
    config.validate();
    require_same_shape(y, y_hat);
    const std::size_t win = config.window;
    const std::size_t rows = y.n_channels();
    const std::size_t cols = y.n_time();
    if (rows < win || cols < win) throw ConfigError("ssim window is larger than the image");

    // Summed-area tables of a, b, a^2, b^2, ab make each window O(1).
    const std::size_t sw = cols + 1;
    std::vector<double> sa((rows + 1) * sw, 0.0), sb(sa), saa(sa), sbb(sa), sab(sa);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double a = y(r, c);
            const double b = y_hat(r, c);
            const std::size_t i = (r + 1) * sw + (c + 1);
            const std::size_t up = r * sw + (c + 1);
            const std::size_t left = (r + 1) * sw + c;
            const std::size_t diag = r * sw + c;
            sa[i] = a + sa[up] + sa[left] - sa[diag];
            sb[i] = b + sb[up] + sb[left] - sb[diag];
            saa[i] = a * a + saa[up] + saa[left] - saa[diag];
            sbb[i] = b * b + sbb[up] + sbb[left] - sbb[diag];
            sab[i] = a * b + sab[up] + sab[left] - sab[diag];
        }
    }
    auto box = [&](const std::vector<double>& s, std::size_t r, std::size_t c) {
        return s[(r + win) * sw + (c + win)] - s[r * sw + (c + win)] - s[(r + win) * sw + c]
               + s[r * sw + c];
    };

    const double n = static_cast<double>(win * win);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r + win <= rows; ++r) {
        for (std::size_t c = 0; c + win <= cols; ++c) {
            const double ma = box(sa, r, c) / n;
            const double mb = box(sb, r, c) / n;
            const double va = std::max(box(saa, r, c) / n - ma * ma, 0.0);
            const double vb = std::max(box(sbb, r, c) / n - mb * mb, 0.0);
            double cov = box(sab, r, c) / n - ma * mb;
            // Cauchy-Schwarz can be violated by cancellation in the tables.
            const double bound = std::sqrt(va * vb);
            cov = std::clamp(cov, -bound, bound);
            total += combine(ssim_terms(ma, mb, va, vb, cov, config), config);
            ++count;
        }
    }
    return std::clamp(total / static_cast<double>(count), -1.0, 1.0);
}

QualityReport evaluate(const Waterfall& reference, const Waterfall& candidate, double peak,
                       const SsimConfig& config)
{
    QualityReport r;
    r.mse = mse(reference, candidate);
    r.psnr = psnr_from_mse(r.mse, peak);
    r.ssim = ssim(reference, candidate, config);
    return r;
}

void write_report(std::ostream& os, const QualityReport& report, double peak,
                  const SsimConfig& config)
{
    os << "mse=" << io::format_double(report.mse) << '\n'
       << "psnr_db=" << io::format_double(report.psnr) << '\n'
       << "ssim=" << io::format_double(report.ssim) << '\n'
       << "peak_v=" << io::format_double(peak) << '\n'
       << "ssim_window=" << config.window << '\n'
       << "ssim_alpha=" << io::format_double(config.alpha) << '\n'
       << "ssim_beta=" << io::format_double(config.beta) << '\n'
       << "ssim_gamma=" << io::format_double(config.gamma) << '\n'
       << "ssim_c1=" << io::format_double(config.c1) << '\n'
       << "ssim_c2=" << io::format_double(config.c2) << '\n'
       << "ssim_c3=" << io::format_double(config.c3) << '\n';
}

} // namespace das::metrics
