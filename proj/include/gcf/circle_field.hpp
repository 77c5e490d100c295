#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "gcf/constants.hpp"

namespace gcf {

class NonConvexError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Real periodic field on S^1 sampled at N = 2^k >= 32 uniform angles.
class CircleField {
  public:
    CircleField() = default;
    explicit CircleField(std::size_t n, double fill = 0.0);
    static CircleField from_samples(std::vector<double> samples);
    static CircleField from_function(std::size_t n, const std::function<double(double)>& f);

    std::size_t size() const { return samples_.size(); }
    double theta(std::size_t j) const;
    double& operator[](std::size_t j) { return samples_[j]; }
    const double& operator[](std::size_t j) const { return samples_[j]; }
    const std::vector<double>& samples() const { return samples_; }
    std::vector<double>& samples() { return samples_; }

    CircleField derivative(int order) const;
    CircleField resampled(std::size_t m) const;
    // spectral energy in modes |m| >= N/4, relative to total energy
    double tail_energy() const;
    // keep only modes that are multiples of k; optionally drop sine parts
    CircleField symmetrized(int k, bool even_in_theta = false) const;
    // keep only modes |m| <= cutoff
    CircleField lowpass(std::size_t cutoff) const;

    double sup_norm() const;
    double min_value() const;
    double max_value() const;

    CircleField& operator+=(const CircleField& o);
    CircleField& operator-=(const CircleField& o);
    CircleField& operator*=(double s);

  private:
    std::vector<double> samples_;
};

CircleField operator+(CircleField a, const CircleField& b);
CircleField operator-(CircleField a, const CircleField& b);
CircleField operator*(double s, CircleField f);

// plain sample-space product (aliased); fine when operands are well resolved
CircleField pointwise_product(const CircleField& a, const CircleField& b);
// product formed on the doubled grid, then truncated back: alias-free
CircleField dealiased_product(const CircleField& a, const CircleField& b);
// pointwise power; requires a strictly positive base unless p is a nonnegative integer
CircleField pointwise_pow(const CircleField& f, double p);

// principal-radius operator for support functions of convex curves: f'' + f
CircleField radius_operator(const CircleField& f);
// determinant of the radii matrix; for curves (n=2) it is radius_operator
inline CircleField radius_determinant(const CircleField& f) { return radius_operator(f); }
// radial shortcut in general dimension: a constant profile c has determinant c^(n-1)
double radius_determinant_radial(double value, int n);

// integration weight (f'' + f)^(1/(1-alpha)) of the profile inner product;
// throws NonConvexError if the radius function is not strictly positive
CircleField shrinker_weight(const CircleField& h, double alpha);

// trapezoid rule (spectrally exact on the periodic grid): (2pi/N) sum f g w
double weighted_inner(const CircleField& f, const CircleField& g, const CircleField& weight);
double weighted_norm(const CircleField& f, const CircleField& weight);

}  // namespace gcf
