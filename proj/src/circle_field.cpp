#include "gcf/circle_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gcf/fft.hpp"

namespace gcf {

static void check_size(std::size_t n) {
    if (n < 32 || !fft::is_pow2(n))
        throw ValidationError("CircleField: N must be a power of two >= 32, got " + std::to_string(n));
}

CircleField::CircleField(std::size_t n, double fill) {
    check_size(n);
    samples_.assign(n, fill);
}

CircleField CircleField::from_samples(std::vector<double> samples) {
    check_size(samples.size());
    CircleField f;
    f.samples_ = std::move(samples);
    return f;
}

CircleField CircleField::from_function(std::size_t n, const std::function<double(double)>& fn) {
    CircleField f(n);
    for (std::size_t j = 0; j < n; ++j) f.samples_[j] = fn(f.theta(j));
    return f;
}

double CircleField::theta(std::size_t j) const {
    return 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(samples_.size());
}

CircleField CircleField::derivative(int order) const {
    auto spec = fft::forward_real(samples_);
    fft::apply_derivative(spec, order);
    CircleField out;
    out.samples_ = fft::inverse_real(spec);
    return out;
}

CircleField CircleField::resampled(std::size_t m) const {
    check_size(m);
    if (m == size()) return *this;
    const auto spec = fft::forward_real(samples_);
    CircleField out;
    out.samples_ = fft::inverse_real(fft::resample_spectrum(spec, m));
    return out;
}

double CircleField::tail_energy() const {
    const auto spec = fft::forward_real(samples_);
    const std::size_t n = size();
    double total = 0.0, tail = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t me = (m <= n / 2) ? m : n - m;
        const double e = std::norm(spec[m]);
        total += e;
        if (me >= n / 4) tail += e;
    }
    return total > 0.0 ? tail / total : 0.0;
}

CircleField CircleField::symmetrized(int k, bool even_in_theta) const {
    if (k < 1) throw ValidationError("symmetrized: fold order must be >= 1");
    auto spec = fft::forward_real(samples_);
    const std::size_t n = size();
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t me = (m <= n / 2) ? m : n - m;
        if (me % static_cast<std::size_t>(k) != 0)
            spec[m] = 0.0;
        else if (even_in_theta)
            spec[m] = spec[m].real();
    }
    CircleField out;
    out.samples_ = fft::inverse_real(spec);
    return out;
}

CircleField CircleField::lowpass(std::size_t cutoff) const {
    auto spec = fft::forward_real(samples_);
    const std::size_t n = size();
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t me = (m <= n / 2) ? m : n - m;
        if (me > cutoff) spec[m] = 0.0;
    }
    CircleField out;
    out.samples_ = fft::inverse_real(spec);
    return out;
}

double CircleField::sup_norm() const {
    double s = 0.0;
    for (double v : samples_) s = std::max(s, std::abs(v));
    return s;
}

double CircleField::min_value() const { return *std::min_element(samples_.begin(), samples_.end()); }
double CircleField::max_value() const { return *std::max_element(samples_.begin(), samples_.end()); }

CircleField& CircleField::operator+=(const CircleField& o) {
    if (o.size() != size()) throw ValidationError("CircleField: size mismatch");
    for (std::size_t j = 0; j < size(); ++j) samples_[j] += o.samples_[j];
    return *this;
}

CircleField& CircleField::operator-=(const CircleField& o) {
    if (o.size() != size()) throw ValidationError("CircleField: size mismatch");
    for (std::size_t j = 0; j < size(); ++j) samples_[j] -= o.samples_[j];
    return *this;
}

CircleField& CircleField::operator*=(double s) {
    for (double& v : samples_) v *= s;
    return *this;
}

CircleField operator+(CircleField a, const CircleField& b) { return a += b; }
CircleField operator-(CircleField a, const CircleField& b) { return a -= b; }
CircleField operator*(double s, CircleField f) { return f *= s; }

CircleField pointwise_product(const CircleField& a, const CircleField& b) {
    if (a.size() != b.size()) throw ValidationError("pointwise_product: size mismatch");
    CircleField out(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
    return out;
}

CircleField dealiased_product(const CircleField& a, const CircleField& b) {
    if (a.size() != b.size()) throw ValidationError("dealiased_product: size mismatch");
    const std::size_t n2 = 2 * a.size();
    const CircleField fa = a.resampled(n2), fb = b.resampled(n2);
    return pointwise_product(fa, fb).resampled(a.size());
}

CircleField pointwise_pow(const CircleField& f, double p) {
    const bool integer_p = (p == std::floor(p)) && p >= 0.0;
    CircleField out(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
        if (!integer_p && f[j] <= 0.0)
            throw NonConvexError("pointwise_pow: nonpositive base at a sample");
        out[j] = std::pow(f[j], p);
    }
    return out;
}

CircleField radius_operator(const CircleField& f) { return f.derivative(2) + f; }

double radius_determinant_radial(double value, int n) {
    if (n < 2) throw ValidationError("radius_determinant_radial: need n >= 2");
    return std::pow(value, n - 1);
}

CircleField shrinker_weight(const CircleField& h, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("shrinker_weight: alpha must lie in (0,1)");
    CircleField r = radius_operator(h);
    if (r.min_value() <= 0.0)
        throw NonConvexError("shrinker_weight: radius function is not strictly positive");
    return pointwise_pow(r, 1.0 / (1.0 - alpha));
}

double weighted_inner(const CircleField& f, const CircleField& g, const CircleField& weight) {
    if (f.size() != g.size() || f.size() != weight.size())
        throw ValidationError("weighted_inner: size mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += f[j] * g[j] * weight[j];
    return s * 2.0 * M_PI / static_cast<double>(f.size());
}

double weighted_norm(const CircleField& f, const CircleField& weight) {
    return std::sqrt(std::max(0.0, weighted_inner(f, f, weight)));
}

}  // namespace gcf
