#pragma once

#include <cstddef>
#include <vector>

#include "gcf/constants.hpp"
#include "gcf/shrinker.hpp"

namespace gcf {

struct RadialSample {
    double l;    // height
    double f;    // support distance of the level circle
    double f_l;  // slope df/dl
};

// Rotationally symmetric translator profile f_M in dimension n: the unique
// solution of  f'' + (1 + M f'^2)^kappa f'^(1/alpha) f^(n-1) = 0  with
// f(0) = 0 and vertical tangency at the tip, sampled on a geometric grid.
struct RadialProfile {
    FlowParams params;
    double M = 1.0;
    std::vector<RadialSample> samples;  // ascending l
    double tip_coefficient = 0.0;       // quadratic opening u''(0) = M^(kappa/n)
    double handover_l = 0.0;            // height where integration left the graph chart

    double l_min() const { return samples.front().l; }
    double l_max() const { return samples.back().l; }
};

struct RadialOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int samples_per_decade = 16;
    // switch from the graph chart to direct integration in l once f_l falls
    // below this (the tip itself has f_l = +inf)
    double slope_handover = 1e3;
};

// Integrates the profile from the tip series at r0 = 1e-6 (graph chart, where
// the data is regular) out to l_max.  Throws NonConvexError on loss of
// monotonicity or overflow, ValidationError on bad parameters.
RadialProfile solve_radial(double M, double alpha, int n, double l_max,
                           const RadialOptions& opts = {});

// f'' at a sample, evaluated through the profile equation
double profile_f_ll(const RadialProfile& p, const RadialSample& s);

struct AsymptoticFit {
    double amplitude;             // fitted leading coefficient of l^sigma
    double correction_exponent;   // fitted exponent of the subleading term
    int correction_sign;          // sign of the fitted correction coefficient
    double correction_coefficient;
    double relative_residual;     // fit residual over the correction magnitude
};

// Least-squares split of the profile tail (top two decades) into
// a*l^sigma + c*l^(sigma + 2(sigma-1)).  Throws ValidationError when the
// profile is too short or the residual exceeds 10% of the correction term.
AsymptoticFit fit_asymptotics(const RadialProfile& p, const DerivedConstants& c);

enum class BarrierSide { sub, super };

struct BarrierReport {
    // residual of the separable barrier f_M(l) h(theta) in the support
    // equation, normalized by the size of its two competing terms
    double min_residual = 0.0;
    double max_residual = 0.0;
    double threshold = 0.0;    // sup h^2 (sub) or inf h^2 (super)
    bool threshold_met = false;
    bool sign_holds = false;   // residual >= 0 everywhere (sub) / <= 0 (super)
    std::size_t grid_l = 0;
    std::size_t grid_theta = 0;
};

// Pointwise sign survey of the barrier inequality on the sample grid of an
// internally solved profile crossed with the profile circle of h.
// Report-only: a violated sign is recorded, not thrown.
BarrierReport barrier_check(double M, const ShrinkerProfile& h, const DerivedConstants& c,
                            BarrierSide side);

}  // namespace gcf
