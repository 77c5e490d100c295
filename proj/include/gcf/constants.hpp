#pragma once

#include <stdexcept>

namespace gcf {

// Parameter box for the flow: hypersurface dimension n >= 2 and curvature
// power 0 < alpha < 1/2.  Most of the lab additionally assumes the
// sub-affine-critical range alpha < 1/(n+2); ops that need it check it.
struct FlowParams {
    int n = 2;
    double alpha = 0.1;
};

// Constants attached to the asymptotic cone profile A * l^sigma * h(theta)
// and to the linearized cylinder operator  w_ss + c1 w_s + c2 L w.
struct DerivedConstants {
    double sigma;      // homogeneity exponent, (1-2a)/(1+a(n-2))
    double amplitude;  // radial coefficient A of the blow-down profile
    double kappa;      // exponent of the tilt factor (1+S_l^2)^kappa
    double c1;         // drift coefficient of the cylinder operator
    double c2;         // reaction coefficient, equals sigma*(1-sigma)
};

// Characteristic exponents of one separated mode of the cylinder operator:
// roots of x^2 + c1 x + c2 * lambda = 0.
struct ExponentPair {
    double beta_minus;
    double beta_plus;
};

class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

DerivedConstants derive_constants(const FlowParams& p);

// Requires lambda <= n-1 so the roots are real (largest admissible eigenvalue).
ExponentPair beta_exponents(double lambda, const DerivedConstants& c);

// Round-profile eigenvalue at spherical-harmonic degree l and its multiplicity.
double sphere_eigenvalue(int n, int l);
long sphere_multiplicity(int n, int l);

// Largest alpha for which the degree-l modes are slow (counted by
// jacobi_count_round).  l=1 gives 1/2; l>=2 gives 1/(l^2+(n-2)l-(n-2)).
double alpha_threshold(int n, int l);

// Number of slow modes (beta+_i < sigma), counted with multiplicity, for the
// round profile.  Computed both from the threshold table and by enumerating
// sphere eigenvalues; throws std::runtime_error if the two disagree.
int jacobi_count_round(const FlowParams& p);

}  // namespace gcf
