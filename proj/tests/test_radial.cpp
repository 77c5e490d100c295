#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gcf/circle_field.hpp"
#include "gcf/constants.hpp"
#include "gcf/radial.hpp"
#include "gcf/shrinker.hpp"

using namespace gcf;

namespace {

// independent tip oracle: invert u = (c/2) r^2 (1 + d r^2) by Newton
double tip_series_f(double l, double c, double d) {
    double r = std::sqrt(2.0 * l / c);
    for (int i = 0; i < 60; ++i) {
        const double u = 0.5 * c * r * r * (1.0 + d * r * r);
        const double du = c * r * (1.0 + 2.0 * d * r * r);
        const double step = (u - l) / du;
        r -= step;
        if (std::fabs(step) < 1e-18 * r) break;
    }
    return r;
}

}  // namespace

TEST_CASE("argument checks") {
    CHECK_THROWS_AS(solve_radial(0.0, 0.1, 2, 1e4), ValidationError);
    CHECK_THROWS_AS(solve_radial(-2.0, 0.1, 2, 1e4), ValidationError);
    CHECK_THROWS_AS(solve_radial(1.0, 0.6, 2, 1e4), ValidationError);
    CHECK_THROWS_AS(solve_radial(1.0, 0.1, 1, 1e4), ValidationError);
    CHECK_THROWS_AS(solve_radial(1.0, 0.1, 2, 0.5), ValidationError);

    const auto dc = derive_constants({2, 0.1});
    const auto shortp = solve_radial(1.0, 0.1, 2, 1e3);
    CHECK_THROWS_AS(fit_asymptotics(shortp, dc), ValidationError);
}

TEST_CASE("affine-critical closed form, independent of the gradient weight") {
    // at alpha = 1/(n+2) the tilt exponent vanishes and f(l) = sqrt(2 l)
    for (double M : {1.0, 0.37, 5.0}) {
        CAPTURE(M);
        const auto p = solve_radial(M, 0.25, 2, 1e6);
        double worst = 0.0;
        for (const auto& s : p.samples) {
            const double exact = std::sqrt(2.0 * s.l);
            worst = std::max(worst, std::fabs(s.f - exact) / exact);
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("tip behaviour and profile shape") {
    const auto p = solve_radial(1.0, 0.1, 2, 1e6);
    const auto dc = derive_constants({2, 0.1});

    CHECK(p.tip_coefficient == doctest::Approx(std::pow(p.M, dc.kappa / 2.0)).epsilon(1e-14));
    CHECK(p.handover_l > p.l_min());
    CHECK(p.handover_l < 1.0);

    // first sample sits in the series regime
    const double d = dc.kappa * p.tip_coefficient * p.tip_coefficient / 8.0;
    const auto& s0 = p.samples.front();
    const double oracle = tip_series_f(s0.l, p.tip_coefficient, d);
    CHECK(std::fabs(s0.f - oracle) / oracle < 1e-10);
    // near the tip f f_l -> 1/u''(0)
    CHECK(std::fabs(s0.f * s0.f_l * p.tip_coefficient - 1.0) < 1e-9);

    bool increasing = true, slope_positive = true, concave_past_one = true;
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
        if (i > 0 && !(p.samples[i].f > p.samples[i - 1].f)) increasing = false;
        if (!(p.samples[i].f_l > 0.0)) slope_positive = false;
        if (p.samples[i].l > 1.0 && !(profile_f_ll(p, p.samples[i]) < 0.0))
            concave_past_one = false;
    }
    CHECK(increasing);
    CHECK(slope_positive);
    CHECK(concave_past_one);

    // geometric grid with the requested density, ending exactly at l_max
    CHECK(p.samples.back().l == 1e6);
    const double grow = std::pow(10.0, 1.0 / 16.0);
    for (std::size_t i = 1; i < p.samples.size(); ++i) {
        const double ratio = p.samples[i].l / p.samples[i - 1].l;
        CHECK(std::fabs(ratio - grow) < 1e-12 * grow);
    }
}

TEST_CASE("halving the tolerance leaves the endpoint unchanged") {
    const auto a = solve_radial(1.0, 0.1, 2, 1e6);
    RadialOptions tight;
    tight.abs_tol = 5e-13;
    tight.rel_tol = 5e-13;
    const auto b = solve_radial(1.0, 0.1, 2, 1e6, tight);
    const double fa = a.samples.back().f;
    CHECK(std::fabs(fa - b.samples.back().f) / fa < 1e-8);
}

TEST_CASE("tail decomposition recovers the cone amplitude") {
    const auto dc = derive_constants({2, 0.1});
    const auto p = solve_radial(1.0, 0.1, 2, 1e6);
    const auto fit = fit_asymptotics(p, dc);

    CHECK(std::fabs(fit.amplitude - dc.amplitude) / dc.amplitude < 0.01);
    const double predicted = dc.sigma + 2.0 * (dc.sigma - 1.0);
    CHECK(std::fabs(fit.correction_exponent - predicted) < 0.05 * predicted);
    CHECK(fit.correction_sign == 1);
    CHECK(fit.relative_residual < 0.1);
}

TEST_CASE("amplitude error decreases as the profile extends") {
    const auto dc = derive_constants({2, 0.1});
    std::vector<double> errors;
    for (double lm : {1e4, 1e5, 1e6}) {
        const auto fit = fit_asymptotics(solve_radial(1.0, 0.1, 2, lm), dc);
        errors.push_back(std::fabs(fit.amplitude - dc.amplitude));
    }
    CHECK(errors[1] < errors[0]);
    CHECK(errors[2] < errors[1]);
}

TEST_CASE("correction coefficient scales linearly with the gradient weight") {
    const auto dc = derive_constants({2, 0.1});
    double lo = 1e300, hi = 0.0;
    for (double M : {0.5, 1.0, 2.0}) {
        const auto fit = fit_asymptotics(solve_radial(M, 0.1, 2, 1e6), dc);
        CHECK(fit.correction_sign == 1);
        lo = std::min(lo, fit.correction_coefficient / M);
        hi = std::max(hi, fit.correction_coefficient / M);
    }
    CHECK(hi / lo < 1.05);
}

TEST_CASE("positive correction persists in higher dimension") {
    const auto dc = derive_constants({3, 0.15});
    const auto p = solve_radial(1.0, 0.15, 3, 1e6);
    const auto fit = fit_asymptotics(p, dc);
    CHECK(fit.correction_sign == 1);
    CHECK(std::fabs(fit.amplitude - dc.amplitude) / dc.amplitude < 1e-3);
}

TEST_CASE("fit rejects data that does not match the model") {
    const auto dc = derive_constants({2, 0.1});
    auto p = solve_radial(1.0, 0.1, 2, 1e6);
    for (auto& s : p.samples)
        s.f += 0.1 * dc.amplitude * std::pow(s.l, dc.sigma) * std::sin(3.0 * std::log(s.l));
    CHECK_THROWS_AS(fit_asymptotics(p, dc), ValidationError);
}

TEST_CASE("round barrier is exactly neutral") {
    const auto dc = derive_constants({2, 0.1});
    const auto rep = barrier_check(1.0, round_shrinker({2, 0.1}), dc, BarrierSide::sub);
    CHECK(rep.min_residual == 0.0);
    CHECK(rep.max_residual == 0.0);
    CHECK(rep.threshold_met);
    CHECK(rep.sign_holds);
}

TEST_CASE("threefold barrier signs") {
    const auto dc = derive_constants({2, 0.1});
    ShrinkerOptions so;
    so.n_samples = 256;
    const auto tri = solve_shrinker_curve(0.1, 3, so);
    const double sup2 = tri.h.max_value() * tri.h.max_value();
    const double inf2 = tri.h.min_value() * tri.h.min_value();

    const auto sub = barrier_check(1.1 * sup2, tri, dc, BarrierSide::sub);
    CHECK(sub.threshold_met);
    CHECK(sub.sign_holds);
    CHECK(sub.min_residual > 1e-3);

    // below the threshold the inequality fails; recorded, not thrown
    const auto bad = barrier_check(0.5 * inf2, tri, dc, BarrierSide::sub);
    CHECK_FALSE(bad.threshold_met);
    CHECK_FALSE(bad.sign_holds);
    CHECK(bad.min_residual < -0.5);

    const auto sup = barrier_check(0.9 * inf2, tri, dc, BarrierSide::super);
    CHECK(sup.threshold_met);
    CHECK(sup.sign_holds);
    CHECK(sup.max_residual < -1e-3);
}
