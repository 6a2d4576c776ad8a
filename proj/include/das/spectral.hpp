#pragma once

#include "das/physics.hpp"
#include "das/waterfall.hpp"

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace das::spectral {

using Complex = std::complex<double>;

/// DFT bins; bin j sits at angular frequency 2*pi*j/n.
struct Spectrum {
    std::vector<Complex> bins;

    std::size_t size() const { return bins.size(); }
    double omega(std::size_t j) const;
};

/// Transform of `signal` zero-padded to length n. Uses a radix-2 FFT when n is
/// a power of two and the direct O(n^2) sum otherwise.
Spectrum dft(std::span<const double> signal, std::size_t n);

/// Always the direct O(n^2) sum.
Spectrum dft_direct(std::span<const double> signal, std::size_t n);

/// Inverse transform (1/n normalization), returning the real part.
std::vector<double> idft_real(const Spectrum& spectrum);
std::vector<Complex> idft(const Spectrum& spectrum);

/// In-place radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<Complex>& data, bool inverse);

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

/// Full linear convolution (length |x| + |k| - 1) via the product of
/// zero-padded transforms.
std::vector<double> freq_convolve(std::span<const double> x, std::span<const double> k);

/// Direct time-domain full convolution.
std::vector<double> direct_convolve(std::span<const double> x, std::span<const double> k);

/// 'same' crop of a full convolution for an odd-length centered kernel.
std::vector<double> crop_same(std::span<const double> full, std::size_t n, std::size_t kernel_len);

/// 'same'-size convolution of every time column along the channel axis.
Waterfall convolve_columns(const Waterfall& w, const physics::ImpulseKernel& kernel);

/// Column operator with the kernel spectrum cached: 'same' convolution and its
/// exact adjoint (correlation) for profiles of a fixed length.
class SameConvolver {
public:
    SameConvolver(std::span<const double> taps, std::size_t n);

    std::size_t length() const { return n_; }
    void apply(std::span<const double> x, std::span<double> out) const;
    void adjoint(std::span<const double> r, std::span<double> out) const;
    /// max_j |K(omega_j)|^2 over a densely padded grid.
    double max_gain_squared() const { return max_gain2_; }

private:
    void run(std::span<const double> x, const std::vector<Complex>& kspec, std::size_t offset,
             std::span<double> out) const;

    std::size_t n_;
    std::size_t taps_;
    std::size_t fft_n_;
    std::vector<Complex> forward_;
    std::vector<Complex> reversed_;
    double max_gain2_ = 0.0;
};

} // namespace das::spectral
