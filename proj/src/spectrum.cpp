#include "gcf/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gcf/fft.hpp"

namespace gcf {

namespace detail {

std::vector<double> jacobi_eigensolve(std::vector<double> a, std::size_t n, std::vector<double>& v) {
    v.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += a[p * n + q] * a[p * n + q];
        return std::sqrt(s);
    };
    double fro0 = 0.0;
    for (double x : a) fro0 += x * x;
    fro0 = std::sqrt(fro0);

    for (int sweep = 0; sweep < 60; ++sweep) {
        const double off = off_norm();
        if (off == 0.0) break;
        // threshold sweeps early on, then rotate everything that is not
        // negligible relative to its diagonal pair
        const double tresh = (sweep < 3) ? 0.2 * off / static_cast<double>(n * n) : 0.0;
        bool rotated = false;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double& apq = a[p * n + q];
                const double g = 100.0 * std::fabs(apq);
                if (sweep > 3 && std::fabs(a[p * n + p]) + g == std::fabs(a[p * n + p]) &&
                    std::fabs(a[q * n + q]) + g == std::fabs(a[q * n + q])) {
                    apq = 0.0;
                    continue;
                }
                if (std::fabs(apq) <= tresh) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                double t;
                if (std::fabs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double h = t * apq;
                a[p * n + p] -= h;
                a[q * n + q] += h;
                apq = 0.0;
                auto rotate = [&](double& x, double& y) {
                    const double xo = x, yo = y;
                    x = xo - s * (yo + tau * xo);
                    y = yo + s * (xo - tau * yo);
                };
                for (std::size_t j = 0; j < p; ++j) rotate(a[j * n + p], a[j * n + q]);
                for (std::size_t j = p + 1; j < q; ++j) rotate(a[p * n + j], a[j * n + q]);
                for (std::size_t j = q + 1; j < n; ++j) rotate(a[p * n + j], a[q * n + j]);
                for (std::size_t j = 0; j < n; ++j) rotate(v[j * n + p], v[j * n + q]);
                rotated = true;
            }
        }
        if (!rotated) break;
    }
    if (off_norm() > 1e-12 * std::max(fro0, 1.0))
        throw std::runtime_error("jacobi_eigensolve: failed to converge");
    std::vector<double> lam(n);
    for (std::size_t i = 0; i < n; ++i) lam[i] = a[i * n + i];
    return lam;
}

}  // namespace detail

namespace {

// reference harmonic list used to pin rotations inside degenerate clusters:
// index 0 is the profile itself, then cos(m t), sin(m t) for m = 1, 2, ...
CircleField reference_function(std::size_t idx, const CircleField& h) {
    if (idx == 0) return h;
    const std::size_t m = (idx + 1) / 2;
    const bool is_cos = (idx % 2 == 1);
    return CircleField::from_function(h.size(), [&](double t) {
        return is_cos ? std::cos(static_cast<double>(m) * t) : std::sin(static_cast<double>(m) * t);
    });
}

}  // namespace

std::vector<double> assemble_operator(const ShrinkerProfile& profile) {
    const CircleField& h = profile.h;
    const std::size_t n = h.size();
    CircleField w = shrinker_weight(h, profile.params.alpha);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = 1.0 / std::sqrt(w[i]);

    // (D^2 + I) is a circulant; one spectral application to a delta gives the
    // convolution kernel, and the conjugated matrix follows entrywise.
    CircleField delta(n, 0.0);
    delta[0] = 1.0;
    CircleField ker = radius_operator(delta);
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m[i * n + j] = u[i] * ker[(i + n - j) % n] * u[j];
    return m;
}

SpectralData solve_spectrum(const ShrinkerProfile& profile, std::size_t num) {
    const CircleField& h = profile.h;
    const std::size_t n = h.size();
    if (num < 1 || num > n / 2)
        throw ValidationError("solve_spectrum: need 1 <= num <= N/2");
    const DerivedConstants consts = derive_constants(profile.params);

    SpectralData out;
    out.params = profile.params;
    out.weight = shrinker_weight(h, profile.params.alpha);

    std::vector<double> m = assemble_operator(profile);
    // symmetrize away FFT roundoff before rotating
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = m[j * n + i] = avg;
        }
    std::vector<double> v;
    std::vector<double> lam = detail::jacobi_eigensolve(std::move(m), n, v);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return lam[i] > lam[j]; });

    // pull the leading eigenpairs back to the plain frame:
    // phi = W^(-1/2) g, normalized in the weighted inner product
    const double scale = std::sqrt(static_cast<double>(n) / (2.0 * M_PI));
    out.lambdas.resize(num);
    out.phis.resize(num);
    for (std::size_t k = 0; k < num; ++k) {
        out.lambdas[k] = lam[order[k]];
        CircleField phi(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            phi[i] = v[i * n + order[k]] / std::sqrt(out.weight[i]) * scale;
        out.phis[k] = std::move(phi);
    }

    // rotate degenerate clusters onto the reference harmonics so repeated
    // eigenspaces come out in a reproducible basis
    std::size_t start = 0;
    while (start < num) {
        std::size_t stop = start + 1;
        const double tol = 1e-8 * std::max(1.0, std::fabs(out.lambdas[start]));
        while (stop < num && std::fabs(out.lambdas[stop] - out.lambdas[start]) <= tol) ++stop;
        const std::size_t d = stop - start;
        if (d > 1) {
            std::vector<std::vector<double>> q(d, std::vector<double>(d));
            for (std::size_t t = 0; t < d; ++t) {
                CircleField ref = reference_function(start + t, h);
                for (std::size_t i = 0; i < d; ++i)
                    q[t][i] = weighted_inner(ref, out.phis[start + i], out.weight);
            }
            // modified Gram-Schmidt on the coefficient rows; degenerate rows
            // fall back to the identity continuation
            for (std::size_t t = 0; t < d; ++t) {
                for (std::size_t s2 = 0; s2 < t; ++s2) {
                    double dot = 0.0;
                    for (std::size_t i = 0; i < d; ++i) dot += q[t][i] * q[s2][i];
                    for (std::size_t i = 0; i < d; ++i) q[t][i] -= dot * q[s2][i];
                }
                double nrm = 0.0;
                for (std::size_t i = 0; i < d; ++i) nrm += q[t][i] * q[t][i];
                nrm = std::sqrt(nrm);
                if (nrm <= 1e-6) {
                    std::fill(q[t].begin(), q[t].end(), 0.0);
                    q[t][t] = 1.0;
                    for (std::size_t s2 = 0; s2 < t; ++s2) {
                        double dot = 0.0;
                        for (std::size_t i = 0; i < d; ++i) dot += q[t][i] * q[s2][i];
                        for (std::size_t i = 0; i < d; ++i) q[t][i] -= dot * q[s2][i];
                    }
                    nrm = 0.0;
                    for (std::size_t i = 0; i < d; ++i) nrm += q[t][i] * q[t][i];
                    nrm = std::sqrt(nrm);
                }
                for (std::size_t i = 0; i < d; ++i) q[t][i] /= nrm;
            }
            std::vector<CircleField> rotated(d);
            for (std::size_t t = 0; t < d; ++t) {
                CircleField acc(n, 0.0);
                for (std::size_t i = 0; i < d; ++i) acc += q[t][i] * out.phis[start + i];
                rotated[t] = std::move(acc);
            }
            for (std::size_t t = 0; t < d; ++t) out.phis[start + t] = std::move(rotated[t]);
        }
        start = stop;
    }

    // deterministic sign convention
    for (std::size_t k = 0; k < num; ++k) {
        CircleField ref = reference_function(k, h);
        const double s = weighted_inner(out.phis[k], ref, out.weight);
        if (std::fabs(s) > 1e-10) {
            if (s < 0.0) out.phis[k] *= -1.0;
        } else if (out.phis[k][0] < 0.0) {
            out.phis[k] *= -1.0;
        }
    }

    out.betas.resize(num);
    for (std::size_t k = 0; k < num; ++k) out.betas[k] = beta_exponents(out.lambdas[k], consts);
    out.slow_count = 0;
    for (std::size_t k = 0; k < num; ++k)
        if (out.betas[k].beta_plus < consts.sigma - 1e-9) ++out.slow_count;
    if (!(out.betas[num - 1].beta_plus >= consts.sigma - 1e-9))
        throw ValidationError("solve_spectrum: num too small to capture every slow mode");

    out.translation_c = translation_norms(profile);
    return out;
}

std::vector<double> translation_norms(const ShrinkerProfile& profile) {
    const DerivedConstants consts = derive_constants(profile.params);
    const CircleField& h = profile.h;
    CircleField w = shrinker_weight(h, profile.params.alpha);
    CircleField x1 = CircleField::from_function(h.size(), [](double t) { return std::cos(t); });
    CircleField x2 = CircleField::from_function(h.size(), [](double t) { return std::sin(t); });
    return {-weighted_norm(h, w) / (consts.amplitude * consts.sigma),
            weighted_norm(x1, w), weighted_norm(x2, w)};
}

}  // namespace gcf
