#include "gcf/constants.hpp"

#include <cmath>
#include <string>

namespace gcf {

static void check_params(const FlowParams& p) {
    if (p.n < 2)
        throw ValidationError("dimension n must be >= 2, got " + std::to_string(p.n));
    if (!(p.alpha > 0.0) || !(p.alpha < 0.5))
        throw ValidationError("alpha must lie in (0, 1/2), got " + std::to_string(p.alpha));
}

DerivedConstants derive_constants(const FlowParams& p) {
    check_params(p);
    const double a = p.alpha;
    const double n = static_cast<double>(p.n);
    const double den = 1.0 + a * (n - 2.0);

    DerivedConstants c;
    c.sigma = (1.0 - 2.0 * a) / den;
    // A^(1/alpha + n - 2) = sigma^(1-1/alpha) * (1-sigma): coefficient that
    // makes A l^sigma an exact radial solution of the blow-down equation.
    c.amplitude = std::pow(c.sigma, (a - 1.0) / den) * std::pow(1.0 - c.sigma, a / den);
    c.kappa = 0.5 * (n + 2.0) - 0.5 / a;
    c.c1 = ((n - 1.0) - a * (n - 2.0)) / den;
    c.c2 = n * a * (1.0 - 2.0 * a) / (den * den);
    return c;
}

ExponentPair beta_exponents(double lambda, const DerivedConstants& c) {
    double disc = c.c1 * c.c1 - 4.0 * c.c2 * lambda;
    // at sigma = 1/2 the top eigenvalue sits exactly on the double root, so an
    // eigensolver's last-digit excursion above it must not flip the sign
    if (disc < 0.0 && disc > -1e-10) disc = 0.0;
    if (disc < 0.0)
        throw ValidationError("beta_exponents: complex roots, lambda exceeds the top eigenvalue");
    const double s = std::sqrt(disc);
    return ExponentPair{0.5 * (-c.c1 - s), 0.5 * (-c.c1 + s)};
}

double sphere_eigenvalue(int n, int l) {
    if (n < 2 || l < 0) throw ValidationError("sphere_eigenvalue: need n >= 2, l >= 0");
    const double dn = n, dl = l;
    return -dl * (dl + dn - 2.0) + (dn - 1.0);
}

static long binom(long a, long b) {
    if (b < 0 || a < b) return 0;
    b = std::min(b, a - b);
    long r = 1;
    for (long i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
}

long sphere_multiplicity(int n, int l) {
    if (n < 2 || l < 0) throw ValidationError("sphere_multiplicity: need n >= 2, l >= 0");
    return binom(n + l - 1, n - 1) - binom(n + l - 3, n - 1);
}

double alpha_threshold(int n, int l) {
    if (n < 2 || l < 1) throw ValidationError("alpha_threshold: need n >= 2, l >= 1");
    if (l == 1) return 0.5;
    const double q = static_cast<double>(l) * l + static_cast<double>(n - 2) * l - (n - 2);
    return 1.0 / q;
}

int jacobi_count_round(const FlowParams& p) {
    check_params(p);
    const DerivedConstants c = derive_constants(p);

    // Threshold table: find l >= 1 with alpha_{l+1} <= alpha < alpha_l, then
    // K = C(n+l-1, n-1) + C(n+l-2, n-1)  (telescoped multiplicity sum).
    // alpha < 1/q is evaluated as alpha*q < 1: exact for on-grid rationals,
    // so ties at alpha = alpha_l land on the smaller-K side deterministically.
    int l = 1;
    while (!(p.alpha * (static_cast<double>(l + 1) * (l + 1) +
                        static_cast<double>(p.n - 2) * (l + 1) - (p.n - 2)) >= 1.0))
        ++l;
    const long k_table = binom(p.n + l - 1, p.n - 1) + binom(p.n + l - 2, p.n - 1);

    // Enumeration: beta+ is strictly increasing along descending eigenvalues,
    // so walk degrees until beta+ reaches sigma.  The 1e-9 guard breaks
    // floating-point ties the same way as the table (threshold excluded).
    long k_enum = 0;
    for (int deg = 0;; ++deg) {
        const double bp = beta_exponents(sphere_eigenvalue(p.n, deg), c).beta_plus;
        if (deg >= 1 && bp >= c.sigma - 1e-9) break;
        k_enum += sphere_multiplicity(p.n, deg);
    }

    if (k_enum != k_table)
        throw std::runtime_error("jacobi_count_round: table/enumeration mismatch (" +
                                 std::to_string(k_table) + " vs " + std::to_string(k_enum) + ")");
    return static_cast<int>(k_table);
}

}  // namespace gcf
