#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gcf/circle_field.hpp"
#include "gcf/constants.hpp"
#include "gcf/exterior.hpp"
#include "gcf/radial.hpp"

namespace gcf {

class ConvexityLost : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class GraphicalityLost : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class StepUnderflow : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class MarchDirection { up, down };

enum class MarchStop { reached_target, convexity_lost, graphicality_lost };

struct MarchCheckpoint {
    double l;
    CircleField S;
    CircleField S_l;
};

// Support-function slice of a translator level set, advanced in the height l.
// Curves only (the profile circle is the theta grid).
struct MarchState {
    double l = 0.0;
    CircleField S;
    CircleField S_l;
    std::vector<MarchCheckpoint> history;  // log-equispaced in l, seed included
    MarchStop stop = MarchStop::reached_target;  // when not reached, l is the breakdown height
};

struct MarchOptions {
    double abs_tol = 1e-11;
    double rel_tol = 1e-11;
    // adaptive step cap dl <= l * max_step_frac: the dynamics are self-similar
    // in log l, so the cap is proportional
    double max_step_frac = 1.0 / 200.0;
    double checkpoint_log_spacing = 0.02;
    // angular modes above the cutoff are discarded after every accepted step;
    // the linearization grows round-off in mode m roughly like l^(0.4 m), so
    // an unfiltered pseudospectral march would amplify noise past the signal
    // within a decade
    std::size_t mode_cutoff = 10;
};

// Integrates S_ll = -(1 + S_l^2)^kappa S_l^(1/alpha) (S_tt + S) toward
// l_target, spectral in theta.  Stops early when strict convexity or
// graphicality fails; the returned state records the reason and the last
// good height.  Throws GraphicalityLost/ConvexityLost when the seed itself
// is invalid and StepUnderflow when the controller collapses with the
// invariants still intact.
MarchState march(const MarchState& init, double l_target, MarchDirection dir,
                 const DerivedConstants& consts, const MarchOptions& opts = {});

// S = A l^sigma h + w(ln l), S_l = sigma A l^(sigma-1) h + w_s(ln l)/l.
// l_start must land on a grid slice of w ("grid mismatch" otherwise).
MarchState seed_from_exterior(const ExteriorField& w, const CircleField& h,
                              const DerivedConstants& consts, double l_start);

// Rotationally symmetric seed from a radial profile sample at height l.
MarchState seed_from_radial(const RadialProfile& p, double l, std::size_t ntheta);

struct ConvergenceReport {
    std::vector<double> heights;
    std::vector<double> distances;   // d(l) = sup |S/(A l^sigma) - h|
    double decay_exponent = 0.0;     // log-log slope of d against l
    bool decreasing_each_decade = false;
};

ConvergenceReport convergence_diagnostics(const MarchState& st, const CircleField& h,
                                          const DerivedConstants& consts);

// Log-log slope of sup |S_a - S_b| across matching checkpoints of two runs;
// for a pair differing by one separated mode this estimates its growth rate.
double paired_difference_exponent(const MarchState& a, const MarchState& b);

}  // namespace gcf
