#pragma once

#include <stdexcept>

#include "gcf/circle_field.hpp"
#include "gcf/constants.hpp"

namespace gcf {

class NoNontrivialSolution : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Closed convex profile curve of the self-shrinking flow, stored through its
// support function on the normal-angle circle.  symmetry_k = 0 marks the
// round profile, k >= 3 a k-fold symmetric one.
struct ShrinkerProfile {
    FlowParams params;
    int symmetry_k = 0;
    CircleField h;
    double residual_sup = 0.0;   // sup of the profile-equation residual
    double shoot_p = 1.0;        // support value at the arc minimum
    int candidates_found = 0;    // roots seen in the shooting scan
};

// Residual (h'' + h) - h^(1 - 1/alpha) of the closed-profile equation (n=2).
CircleField shrinker_residual(const CircleField& h, double alpha);

ShrinkerProfile round_shrinker(const FlowParams& p, std::size_t n_samples = 128);

struct ShrinkerOptions {
    std::size_t n_samples = 128;
    int rk_steps_per_arc = 2048;   // fixed RK4 steps on the fundamental arc
    double bisect_tol = 1e-13;
    double scan_start = 1e-6;      // first amplitude probed below the round value
    double scan_growth = 1.2;      // geometric growth of probed amplitudes
};

// k-fold symmetric profile for curves (n=2), k >= 3.  Shoots the arc ODE with
// Neumann data and bisects the support minimum below the round value; the arc
// is lifted to the full circle by reflection/rotation, then projected onto the
// exactly k-fold-symmetric even cosine modes.  Throws NoNontrivialSolution if
// no closing arc exists (alpha >= 1/k^2).
ShrinkerProfile solve_shrinker_curve(double alpha, int k, const ShrinkerOptions& opts = {});

// Gauss curvature as a function of the normal angle: 1 / (h'' + h).
// Throws NonConvexError if the radius function is not strictly positive.
CircleField gauss_curvature(const CircleField& h);

}  // namespace gcf
