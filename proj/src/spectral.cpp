#include "das/spectral.hpp"

#include "das/common.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace das::spectral {

double Spectrum::omega(std::size_t j) const
{
    return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(bins.size());
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace {

// exp(-2 pi i k / n) for k < n/2, computed directly per index.
const std::vector<Complex>& twiddles(std::size_t n)
{
    thread_local std::map<std::size_t, std::vector<Complex>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<Complex> tw(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        tw[k] = {std::cos(ang), std::sin(ang)};
    }
    return cache.emplace(n, std::move(tw)).first->second;
}

// Plain complex product; std::complex's operator* adds NaN recovery we do not need.
inline Complex cmul(Complex a, Complex b)
{
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

} // namespace

void fft_inplace(std::vector<Complex>& a, bool inverse)
{
    const std::size_t n = a.size();
    if (!is_power_of_two(n)) throw ConfigError("fft size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& tw = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const Complex w = inverse ? std::conj(tw[k * stride]) : tw[k * stride];
                const Complex u = a[i + k];
                const Complex v = cmul(a[i + k + half], w);
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
    if (inverse) {
        const double s = 1.0 / static_cast<double>(n);
        for (auto& v : a) v *= s;
    }
}

Spectrum dft_direct(std::span<const double> signal, std::size_t n)
{
    if (n < signal.size()) throw ConfigError("dft length shorter than the signal");
    Spectrum s;
    s.bins.assign(n, Complex{});
    for (std::size_t j = 0; j < n; ++j) {
        Complex acc{};
        for (std::size_t m = 0; m < signal.size(); ++m) {
            // Reduce j*m mod n before scaling so the phase stays accurate.
            const double phase = -2.0 * std::numbers::pi * static_cast<double>((j * m) % n)
                                 / static_cast<double>(n);
            acc += signal[m] * Complex{std::cos(phase), std::sin(phase)};
        }
        s.bins[j] = acc;
    }
    return s;
}

Spectrum dft(std::span<const double> signal, std::size_t n)
{
    if (n < signal.size()) throw ConfigError("dft length shorter than the signal");
    if (!is_power_of_two(n)) return dft_direct(signal, n);
    Spectrum s;
    s.bins.assign(n, Complex{});
    for (std::size_t m = 0; m < signal.size(); ++m) s.bins[m] = signal[m];
    fft_inplace(s.bins, false);
    return s;
}

std::vector<Complex> idft(const Spectrum& spectrum)
{
    const std::size_t n = spectrum.size();
    if (is_power_of_two(n)) {
        std::vector<Complex> a = spectrum.bins;
        fft_inplace(a, true);
        return a;
    }
    std::vector<Complex> out(n);
    for (std::size_t m = 0; m < n; ++m) {
        Complex acc{};
        for (std::size_t j = 0; j < n; ++j) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>((j * m) % n)
                                 / static_cast<double>(n);
            acc += spectrum.bins[j] * Complex{std::cos(phase), std::sin(phase)};
        }
        out[m] = acc / static_cast<double>(n);
    }
    return out;
}

std::vector<double> idft_real(const Spectrum& spectrum)
{
    const auto c = idft(spectrum);
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return out;
}

std::vector<double> freq_convolve(std::span<const double> x, std::span<const double> k)
{
    if (x.empty() || k.empty()) throw ConfigError("convolution operands must be nonempty");
    const std::size_t len = x.size() + k.size() - 1;
    const std::size_t n = next_power_of_two(len);
    Spectrum xs = dft(x, n);
    const Spectrum ks = dft(k, n);
    for (std::size_t j = 0; j < n; ++j) xs.bins[j] = cmul(xs.bins[j], ks.bins[j]);
    auto full = idft_real(xs);
    full.resize(len);
    return full;
}

std::vector<double> direct_convolve(std::span<const double> x, std::span<const double> k)
{
    if (x.empty() || k.empty()) throw ConfigError("convolution operands must be nonempty");
    std::vector<double> out(x.size() + k.size() - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < k.size(); ++j) out[i + j] += x[i] * k[j];
    return out;
}

std::vector<double> crop_same(std::span<const double> full, std::size_t n, std::size_t kernel_len)
{
    const std::size_t offset = (kernel_len - 1) / 2;
    return {full.begin() + static_cast<std::ptrdiff_t>(offset),
            full.begin() + static_cast<std::ptrdiff_t>(offset + n)};
}

Waterfall convolve_columns(const Waterfall& w, const physics::ImpulseKernel& kernel)
{
    if (kernel.taps.empty() || kernel.taps.size() % 2 == 0)
        throw ConfigError("kernel must have an odd number of taps");
    if (kernel.taps.size() > w.n_channels())
        throw ConfigError("kernel is longer than the waterfall column");
    Waterfall out = w;
    out.normalized = false;
    for (std::size_t t = 0; t < w.n_time(); ++t) {
        const auto col = w.column(t);
        const auto full = freq_convolve(col, kernel.taps);
        out.set_column(t, crop_same(full, w.n_channels(), kernel.taps.size()));
    }
    return out;
}

SameConvolver::SameConvolver(std::span<const double> taps, std::size_t n)
    : n_(n), taps_(taps.size())
{
    if (taps.empty() || taps.size() % 2 == 0)
        throw ConfigError("kernel must have an odd number of taps");
    if (n == 0) throw ConfigError("profile length must be positive");
    fft_n_ = next_power_of_two(n + taps.size() - 1);
    forward_ = dft(taps, fft_n_).bins;
    std::vector<double> rev(taps.rbegin(), taps.rend());
    reversed_ = dft(rev, fft_n_).bins;

    const std::size_t dense = next_power_of_two(std::max<std::size_t>(8 * taps.size(), fft_n_));
    const Spectrum g = dft(taps, dense);
    for (const auto& b : g.bins) max_gain2_ = std::max(max_gain2_, std::norm(b));
}

void SameConvolver::run(std::span<const double> x, const std::vector<Complex>& kspec,
                        std::size_t offset, std::span<double> out) const
{
    thread_local std::vector<Complex> buf;
    buf.assign(fft_n_, Complex{});
    for (std::size_t i = 0; i < n_; ++i) buf[i] = x[i];
    fft_inplace(buf, false);
    for (std::size_t j = 0; j < fft_n_; ++j) buf[j] = cmul(buf[j], kspec[j]);
    fft_inplace(buf, true);
    for (std::size_t i = 0; i < n_; ++i) out[i] = buf[i + offset].real();
}

void SameConvolver::apply(std::span<const double> x, std::span<double> out) const
{
    run(x, forward_, (taps_ - 1) / 2, out);
}

void SameConvolver::adjoint(std::span<const double> r, std::span<double> out) const
{
    // For an odd centered kernel the adjoint is the 'same' convolution with
    // the reversed taps at the same offset.
    run(r, reversed_, (taps_ - 1) / 2, out);
}

} // namespace das::spectral
