#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace gcf::fft {

// In-place radix-2 transform; size must be a power of two.  Forward is
// unnormalized, inverse divides by n, so inverse(forward(x)) == x.
void transform(std::vector<std::complex<double>>& a, bool inverse);

std::vector<std::complex<double>> forward_real(const std::vector<double>& x);
std::vector<double> inverse_real(const std::vector<std::complex<double>>& spec);

// Spectral derivative of given order applied to a full complex spectrum.
// Odd orders zero the Nyquist bin; even orders keep it real.
void apply_derivative(std::vector<std::complex<double>>& spec, int order);

// Trig-interpolation resample of a full spectrum from size n to size m
// (zero-pad or truncate, Nyquist split/fold, amplitudes preserved).
std::vector<std::complex<double>> resample_spectrum(const std::vector<std::complex<double>>& spec,
                                                    std::size_t m);

bool is_pow2(std::size_t n);

}  // namespace gcf::fft
