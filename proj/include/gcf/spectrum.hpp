#pragma once

#include <cstddef>
#include <vector>

#include "gcf/circle_field.hpp"
#include "gcf/constants.hpp"
#include "gcf/shrinker.hpp"

namespace gcf {

// Eigendata of the profile operator L f = (f'' + f) / weight in the weighted
// inner product, together with the induced characteristic exponents of the
// cylinder operator.
struct SpectralData {
    FlowParams params;
    CircleField weight;
    std::vector<double> lambdas;         // non-increasing
    std::vector<CircleField> phis;       // orthonormal, aligned to reference harmonics
    std::vector<ExponentPair> betas;     // per eigenvalue
    int slow_count = 0;                  // modes with beta+ strictly below sigma
    std::vector<double> translation_c;   // coefficients of the soliton directions
};

// Dense symmetric form W^(-1/2) (D^2 + I) W^(-1/2) of the profile operator,
// row-major N x N.  Symmetric up to FFT roundoff.
std::vector<double> assemble_operator(const ShrinkerProfile& profile);

// Full dense eigensolve reduced to the leading `num` pairs (num <= N/2).
SpectralData solve_spectrum(const ShrinkerProfile& profile, std::size_t num);

// Expansion coefficients {c_0, c_1, c_2} of the translating directions:
// c_0 = -||h||_w / (A sigma), c_i = ||x_i||_w.
std::vector<double> translation_norms(const ShrinkerProfile& profile);

namespace detail {

// Cyclic Jacobi eigensolver for a dense symmetric row-major matrix.  Returns
// unsorted eigenvalues; v receives the eigenvectors in its columns.
// Deterministic and single-threaded by design.
std::vector<double> jacobi_eigensolve(std::vector<double> a, std::size_t n, std::vector<double>& v);

}  // namespace detail

}  // namespace gcf
