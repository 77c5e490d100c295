#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gcf/constants.hpp"

using namespace gcf;

static double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

TEST_CASE("derived constants: pinned values") {
    // affine-critical corner n=2, alpha=1/4
    auto c = derive_constants({2, 0.25});
    CHECK(c.sigma == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c.amplitude == doctest::Approx(1.4142135623730950488).epsilon(1e-14));
    CHECK(c.kappa == doctest::Approx(0.0).epsilon(1e-15));

    c = derive_constants({2, 0.1});
    CHECK(c.sigma == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(c.amplitude == doctest::Approx(1.0406915092523414255).epsilon(1e-14));
    CHECK(c.c1 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.c2 == doctest::Approx(0.16).epsilon(1e-15));

    c = derive_constants({3, 0.15});
    CHECK(c.sigma == doctest::Approx(0.60869565217391304348).epsilon(1e-14));
    CHECK(c.amplitude == doctest::Approx(1.2770447446095937148).epsilon(1e-14));
    CHECK(c.kappa == doctest::Approx(-0.83333333333333333333).epsilon(1e-14));
    CHECK(c.c1 == doctest::Approx(1.6086956521739130435).epsilon(1e-14));
    CHECK(c.c2 == doctest::Approx(0.23818525519848771267).epsilon(1e-14));
}

TEST_CASE("derived constants: algebraic identities over random parameters") {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> ua(0.01, 0.49);
    std::uniform_int_distribution<int> un(2, 6);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = un(rng);
        const double a = ua(rng);
        const auto c = derive_constants({n, a});

        // amplitude closes the radial blow-down balance
        const double lhs = std::pow(c.amplitude, 1.0 / a + n - 2.0);
        const double rhs = std::pow(c.sigma, 1.0 - 1.0 / a) * (1.0 - c.sigma);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));

        CHECK(std::abs(c.c2 - c.sigma * (1.0 - c.sigma)) <= 1e-12);

        // characteristic exponents at the two special eigenvalues; the
        // identity beta+ = sigma-1 needs the sub-affine-critical root order
        const auto b_top = beta_exponents(n - 1.0, c);
        if (a < 1.0 / (n + 2))
            CHECK(rel_err(b_top.beta_plus, c.sigma - 1.0) <= 1e-12);
        const auto b_ker = beta_exponents(0.0, c);
        CHECK(std::abs(b_ker.beta_plus) <= 1e-14);
        CHECK(rel_err(b_ker.beta_minus, -c.c1) <= 1e-12);
        CHECK(std::abs(b_top.beta_plus + b_top.beta_minus + c.c1) <= 1e-12);
    }
}

TEST_CASE("derived constants: sigma is exactly 1/2 at the affine-critical alpha") {
    for (int n = 2; n <= 6; ++n) {
        const auto c = derive_constants({n, 1.0 / (n + 2)});
        CHECK(std::abs(c.sigma - 0.5) <= 8 * std::numeric_limits<double>::epsilon());
        CHECK(std::abs(c.kappa) <= 8 * std::numeric_limits<double>::epsilon() * (n + 2));
    }
}

TEST_CASE("beta exponents: pinned value and monotonicity") {
    const auto c = derive_constants({2, 0.1});
    const auto b = beta_exponents(-3.0, c);
    CHECK(b.beta_plus == doctest::Approx(0.35440037453175311679).epsilon(1e-14));
    CHECK(b.beta_minus == doctest::Approx(-1.3544003745317531168).epsilon(1e-14));

    // beta+ strictly decreasing in lambda, beta- strictly increasing
    double prev_p = beta_exponents(1.0, c).beta_plus;
    double prev_m = beta_exponents(1.0, c).beta_minus;
    for (double lam = 0.5; lam > -40.0; lam -= 0.5) {
        const auto e = beta_exponents(lam, c);
        CHECK(e.beta_plus > prev_p);
        CHECK(e.beta_minus < prev_m);
        prev_p = e.beta_plus;
        prev_m = e.beta_minus;
    }

    CHECK_THROWS_AS(beta_exponents(50.0, c), ValidationError);
}

TEST_CASE("sphere eigenvalues and multiplicities") {
    CHECK(sphere_eigenvalue(3, 2) == doctest::Approx(-4.0));
    CHECK(sphere_multiplicity(3, 2) == 5);
    CHECK(sphere_eigenvalue(2, 3) == doctest::Approx(-8.0));
    CHECK(sphere_multiplicity(2, 3) == 2);
    for (int n = 2; n <= 6; ++n) {
        CHECK(sphere_eigenvalue(n, 0) == doctest::Approx(n - 1.0));
        CHECK(sphere_multiplicity(n, 0) == 1);
        CHECK(sphere_eigenvalue(n, 1) == doctest::Approx(0.0));
        CHECK(sphere_multiplicity(n, 1) == n);
    }
    // first 12 entries of the round n=2 spectrum, with multiplicity
    const double expected[12] = {1, 0, 0, -3, -3, -8, -8, -15, -15, -24, -24, -35};
    int idx = 0;
    for (int l = 0; idx < 12; ++l)
        for (long m = 0; m < sphere_multiplicity(2, l) && idx < 12; ++m, ++idx)
            CHECK(sphere_eigenvalue(2, l) == doctest::Approx(expected[idx]));
}

TEST_CASE("alpha thresholds") {
    CHECK(alpha_threshold(2, 2) == doctest::Approx(0.25).epsilon(1e-15));
    for (int n = 2; n <= 6; ++n) {
        CHECK(alpha_threshold(n, 1) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(alpha_threshold(n, 2) == doctest::Approx(1.0 / (n + 2)).epsilon(1e-14));
    }
    // l^2 + (n-2) l - (n-2) at n=3, l=3 is 9+3-1 = 11
    CHECK(alpha_threshold(3, 3) == doctest::Approx(1.0 / 11.0).epsilon(1e-15));
    CHECK(alpha_threshold(2, 5) == doctest::Approx(1.0 / 25.0).epsilon(1e-15));
}

TEST_CASE("slow-mode count: pinned values and staircase") {
    CHECK(jacobi_count_round({2, 0.2}) == 5);
    CHECK(jacobi_count_round({2, 0.05}) == 9);
    for (int n = 2; n <= 6; ++n) {
        CHECK(jacobi_count_round({n, 0.49}) == n + 1);
        CHECK(jacobi_count_round({n, 1.0 / (n + 2)}) == n + 1);  // threshold tie: smaller K
    }
    // n=2 staircase K = 2l+1 on [1/(l+1)^2, 1/l^2)
    for (int l = 1; l <= 6; ++l) {
        const double lo = 1.0 / ((l + 1.0) * (l + 1.0)), hi = 1.0 / (l * l);
        for (double t : {0.001, 0.5, 0.999}) {
            const double a = lo + t * (hi - lo);
            if (a >= 0.5) continue;
            CHECK(jacobi_count_round({2, a}) == 2 * l + 1);
        }
    }
    // table vs enumeration agreement is checked internally; sweep a grid
    for (int n = 2; n <= 4; ++n)
        for (int i = 0; i < 100; ++i) {
            const double a = 0.004 + 0.0049 * i;
            CHECK_NOTHROW(jacobi_count_round({n, a}));
        }
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(derive_constants({1, 0.1}), ValidationError);
    CHECK_THROWS_AS(derive_constants({2, 0.5}), ValidationError);
    CHECK_THROWS_AS(derive_constants({2, 0.0}), ValidationError);
    CHECK_THROWS_AS(derive_constants({2, -0.1}), ValidationError);
    CHECK_THROWS_AS(alpha_threshold(2, 0), ValidationError);
}
