#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gcf/circle_field.hpp"
#include "gcf/constants.hpp"
#include "gcf/shrinker.hpp"
#include "gcf/spectrum.hpp"

namespace gcf {

class GammaOnResonance : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class TailDivergence : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class NoContraction : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Uniform grid on the exterior cylinder [s0, s0 + (ns-1) ds] x S^1.
struct CylinderGrid {
    double s0 = 8.0;
    double ds = 0.02;
    std::size_t ns = 801;
    std::size_t ntheta = 128;
    double s(std::size_t j) const { return s0 + ds * static_cast<double>(j); }
    double s_max() const { return s(ns - 1); }
};

// Scalar field on the cylinder, slice-major storage.
class ExteriorField {
  public:
    ExteriorField() = default;
    ExteriorField(const CylinderGrid& g, double fill = 0.0);

    const CylinderGrid& grid() const { return grid_; }
    double& at(std::size_t slice, std::size_t k) { return v_[slice * grid_.ntheta + k]; }
    double at(std::size_t slice, std::size_t k) const { return v_[slice * grid_.ntheta + k]; }
    CircleField slice(std::size_t i) const;
    void set_slice(std::size_t i, const CircleField& f);
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    // s-derivatives: 4th-order centered differences, one-sided at the edges
    ExteriorField d_s() const;
    ExteriorField d_ss() const;

    // max_j e^(-gamma s_j) sup_theta |w|; the c2 variant adds first and second
    // s- and theta-derivative terms (discrete stand-in for a weighted C^2 norm)
    double weighted_sup(double gamma) const;
    double weighted_c2(double gamma) const;

    ExteriorField& operator+=(const ExteriorField& o);
    ExteriorField& operator-=(const ExteriorField& o);
    ExteriorField& operator*=(double c);

    // decay-rate tag of the norm this field was last measured in
    double gamma = 0.0;

  private:
    CylinderGrid grid_;
    std::vector<double> v_;
};

ExteriorField operator+(ExteriorField a, const ExteriorField& b);
ExteriorField operator-(ExteriorField a, const ExteriorField& b);

// Profile data bound to a cylinder grid, with the doubled-grid tables used by
// the defect evaluation precomputed once.
struct ExteriorContext {
    FlowParams params;
    DerivedConstants consts;
    CylinderGrid grid;
    CircleField h;                  // profile at ntheta
    CircleField weight;             // inner-product weight at ntheta
    std::vector<CircleField> phis;  // eigenbasis at ntheta
    std::vector<double> lambdas;
    std::vector<ExponentPair> betas;
    int slow_count = 0;
    bool parallel = true;

    // doubled-grid tables
    CircleField h2;          // profile
    CircleField det_h2;      // radius determinant of the profile
    CircleField h2_pow;      // h^(1/alpha)
    CircleField h2_pow_m1;   // h^(1/alpha - 1)

    static ExteriorContext make(const ShrinkerProfile& profile, const SpectralData& spec,
                                const CylinderGrid& grid, bool parallel = true);
};

// cylinder operator w_ss + c1 w_s + c2 (w_theta_theta + w) / weight
ExteriorField apply_linearized(const ExteriorField& w, const ExteriorContext& ctx);

// Nonlinear defect of the exterior equation, split by origin: the gradient
// shape term (bilinear in w_s and the radius increment), the quadratic
// remainder of the support power, and the tilt factor (1+p^2)^kappa - 1.
// The full equation residual is apply_linearized(w) + total.
struct SliceDefect {
    CircleField shape;
    CircleField power_rem;
    CircleField tilt;
    CircleField total;
};
SliceDefect defect_slice(const CircleField& w, const CircleField& ws, double s,
                         const ExteriorContext& ctx);

struct DefectFields {
    ExteriorField shape;
    ExteriorField power_rem;
    ExteriorField tilt;
    ExteriorField total;
};
DefectFields error_terms(const ExteriorField& w, const ExteriorContext& ctx);

struct InverseOptions {
    double resonance_tol = 1e-8;
    double tail_rate_floor = 1e-14;  // relative mode mass below which the tail
                                     // rate measurement falls back to gamma
};

// Right inverse of the cylinder operator at decay rate gamma: modes with
// beta+ < gamma integrate from the inner boundary, the rest from +infinity
// with a measured-rate closure of the tail beyond the last slice.  Every mode
// profile vanishes at the inner boundary.
ExteriorField invert_linearized(const ExteriorField& g, double gamma, const ExteriorContext& ctx,
                                const InverseOptions& opts = {});

// widest non-resonant decay window inside (3 sigma - 2, sigma); returns its midpoint
double choose_gamma(const ExteriorContext& ctx);

struct PicardOptions {
    int max_iter = 60;
    double tol = 1e-10;
    bool include_tilt = true;   // false drops the tilt factor from the defect
    bool linear_only = false;   // true forces the whole defect to zero (seed-only probe)
    InverseOptions inverse;
};

struct PicardResult {
    ExteriorField w;
    double gamma = 0.0;
    std::vector<double> increment_norms;
    std::vector<double> ratios;
    double residual = 0.0;   // gamma-weighted sup of the full equation residual
    int iterations = 0;
};

// Exterior translator from the zero seed: u0 = H(E(0)), then increments
// u_{k+1} = H(E(sum) - E(previous sum)) until the weighted increment norm
// drops below tol.
PicardResult picard_zero_seed(const ExteriorContext& ctx, double gamma,
                              const PicardOptions& opts = {});

// Perturbation of an existing solution by the decaying Jacobi field of one
// slow mode; the loop runs at a rate just below beta+_mode.
PicardResult jacobi_perturb(const ExteriorContext& ctx, const ExteriorField& base,
                            double base_gamma, std::size_t mode, double amplitude,
                            const PicardOptions& opts = {});

struct BoundaryMatchResult {
    PicardResult picard;
    double boundary_error = 0.0;  // sup_theta |(w+u)/h + sign e^(gamma2 s0)| at s0
    double slope_error = 0.0;     // |d_s((w+u)/h) + sign beta-_0 e^(gamma2 s0)| / e^(gamma2 s0)
};

// Adds kernel elements decaying from the inner boundary so that the combined
// field matches (w+u)/h = -sign e^(gamma2 s0) there, then re-runs Picard.
BoundaryMatchResult boundary_match(const ExteriorContext& ctx, const ExteriorField& base,
                                   double base_gamma, double gamma2, int sign,
                                   const PicardOptions& opts = {});

// gamma-weighted sup norm of the full equation residual at w
double equation_residual(const ExteriorField& w, const ExteriorContext& ctx, double gamma,
                         bool include_tilt = true);

// log-linear decay rate of the slice sup norms of a field (top fraction of slices)
double fitted_decay_rate(const ExteriorField& w, double fraction = 0.5);

}  // namespace gcf
