#include "gcf/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace gcf::fft {

bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

void transform(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of two");
    if (n == 1) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& z : a) z *= inv;
    }
}

std::vector<std::complex<double>> forward_real(const std::vector<double>& x) {
    std::vector<std::complex<double>> a(x.begin(), x.end());
    transform(a, false);
    return a;
}

std::vector<double> inverse_real(const std::vector<std::complex<double>>& spec) {
    auto a = spec;
    transform(a, true);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i].real();
    return out;
}

void apply_derivative(std::vector<std::complex<double>>& spec, int order) {
    const std::size_t n = spec.size();
    const std::complex<double> iu(0.0, 1.0);
    for (std::size_t m = 0; m < n; ++m) {
        const long me = (m <= n / 2) ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
        if (m == n / 2 && (order % 2 != 0)) {
            spec[m] = 0.0;
            continue;
        }
        std::complex<double> mult(1.0, 0.0);
        for (int k = 0; k < order; ++k) mult *= iu * static_cast<double>(me);
        spec[m] *= mult;
    }
}

std::vector<std::complex<double>> resample_spectrum(const std::vector<std::complex<double>>& spec,
                                                    std::size_t m) {
    const std::size_t n = spec.size();
    if (!is_pow2(n) || !is_pow2(m)) throw std::invalid_argument("resample: sizes must be powers of two");
    const double scale = static_cast<double>(m) / static_cast<double>(n);
    std::vector<std::complex<double>> out(m, 0.0);
    if (m == n) {
        out = spec;
        for (auto& z : out) z *= scale;
        return out;
    }
    if (m > n) {
        for (std::size_t k = 0; k < n / 2; ++k) out[k] = spec[k] * scale;
        for (std::size_t k = 1; k < n / 2; ++k) out[m - k] = spec[n - k] * scale;
        // split the old Nyquist bin across +-n/2 to keep the interpolant real
        out[n / 2] = spec[n / 2] * (0.5 * scale);
        out[m - n / 2] = spec[n / 2] * (0.5 * scale);
        return out;
    }
    for (std::size_t k = 0; k < m / 2; ++k) out[k] = spec[k] * scale;
    for (std::size_t k = 1; k < m / 2; ++k) out[m - k] = spec[n - k] * scale;
    // fold the +-m/2 pair into the new Nyquist bin
    out[m / 2] = (spec[m / 2] + spec[n - m / 2]) * scale;
    return out;
}

}  // namespace gcf::fft
