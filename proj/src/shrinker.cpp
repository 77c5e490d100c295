#include "gcf/shrinker.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace gcf {

namespace {

struct ArcTrajectory {
    std::vector<double> h;   // support values on the uniform arc grid
    std::vector<double> v;   // first derivative values
    bool valid = false;
};

// Fixed-step RK4 for h'' = h^(1-1/alpha) - h on [0, pi/k] with h(0)=p, h'(0)=0.
// Marks the trajectory invalid when the support collapses or blows up.
ArcTrajectory shoot_arc(double p, double alpha, int k, int steps) {
    ArcTrajectory tr;
    tr.h.resize(static_cast<std::size_t>(steps) + 1);
    tr.v.resize(static_cast<std::size_t>(steps) + 1);
    const double ds = M_PI / (static_cast<double>(k) * steps);
    const double q = 1.0 - 1.0 / alpha;   // negative in the admissible range
    double h = p, v = 0.0;
    tr.h[0] = h;
    tr.v[0] = v;
    auto acc = [q](double x) { return std::pow(x, q) - x; };
    for (int i = 0; i < steps; ++i) {
        if (!(h > 1e-8) || !(h < 1e6) || !std::isfinite(v) || std::fabs(v) > 1e6)
            return tr;
        const double k1h = v, k1v = acc(h);
        const double h2 = h + 0.5 * ds * k1h;
        if (!(h2 > 1e-8)) return tr;
        const double k2h = v + 0.5 * ds * k1v, k2v = acc(h2);
        const double h3 = h + 0.5 * ds * k2h;
        if (!(h3 > 1e-8)) return tr;
        const double k3h = v + 0.5 * ds * k2v, k3v = acc(h3);
        const double h4 = h + ds * k3h;
        if (!(h4 > 1e-8)) return tr;
        const double k4h = v + ds * k3v, k4v = acc(h4);
        h += ds / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
        v += ds / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        tr.h[static_cast<std::size_t>(i) + 1] = h;
        tr.v[static_cast<std::size_t>(i) + 1] = v;
    }
    if (!(h > 1e-8) || !std::isfinite(v)) return tr;
    tr.valid = true;
    return tr;
}

// Number of interior sign changes of h' along the arc; a fundamental arc has
// none (h rises monotonically from its minimum to the fold point).
int interior_turning_points(const ArcTrajectory& tr) {
    double vmax = 0.0;
    for (double v : tr.v) vmax = std::max(vmax, std::fabs(v));
    const double floor_v = 1e-10 * std::max(1.0, vmax);
    int count = 0;
    double prev = 0.0;
    for (std::size_t i = 1; i + 1 < tr.v.size(); ++i) {
        const double cur = tr.v[i];
        if (std::fabs(cur) <= floor_v) continue;
        if (prev != 0.0 && cur * prev < 0.0) ++count;
        prev = cur;
    }
    return count;
}

// Cubic Hermite evaluation of the arc trajectory at parameter t in [0, pi/k].
double hermite_eval(const ArcTrajectory& tr, double ds, double t) {
    const std::size_t last = tr.h.size() - 1;
    double x = t / ds;
    auto i = static_cast<std::size_t>(std::floor(x));
    if (i >= last) i = last - 1;
    const double u = x - static_cast<double>(i);
    const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    const double h10 = u * (1.0 - u) * (1.0 - u);
    const double h01 = u * u * (3.0 - 2.0 * u);
    const double h11 = u * u * (u - 1.0);
    return h00 * tr.h[i] + h10 * ds * tr.v[i] + h01 * tr.h[i + 1] + h11 * ds * tr.v[i + 1];
}

}  // namespace

CircleField shrinker_residual(const CircleField& h, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("shrinker_residual: alpha must lie in (0,1)");
    CircleField lhs = radius_operator(h);
    CircleField rhs = pointwise_pow(h, 1.0 - 1.0 / alpha);
    return lhs - rhs;
}

ShrinkerProfile round_shrinker(const FlowParams& p, std::size_t n_samples) {
    derive_constants(p);  // validates the parameter range
    ShrinkerProfile out;
    out.params = p;
    out.symmetry_k = 0;
    out.h = CircleField(n_samples, 1.0);
    out.residual_sup = 0.0;
    out.shoot_p = 1.0;
    out.candidates_found = 1;
    return out;
}

ShrinkerProfile solve_shrinker_curve(double alpha, int k, const ShrinkerOptions& opts) {
    if (k < 3) throw ValidationError("solve_shrinker_curve: symmetry order must be >= 3");
    FlowParams params{2, alpha};
    derive_constants(params);

    const int steps = opts.rk_steps_per_arc;
    const double ds = M_PI / (static_cast<double>(k) * steps);
    auto endpoint_slope = [&](double p) { return shoot_arc(p, alpha, k, steps); };

    // Scan support minima geometrically below the round value and bracket the
    // sign changes of the Neumann mismatch at the fold point.
    struct Bracket {
        double lo, hi, f_lo, f_hi;
    };
    std::vector<Bracket> brackets;
    double p_prev = 0.0, f_prev = 0.0;
    bool have_prev = false;
    for (int i = 0;; ++i) {
        const double amp = opts.scan_start * std::pow(opts.scan_growth, i);
        const double p = 1.0 - amp;
        if (!(p > 1e-6)) break;
        ArcTrajectory tr = endpoint_slope(p);
        if (!tr.valid) break;
        const double f = tr.v.back();
        if (have_prev && f * f_prev < 0.0) brackets.push_back({p, p_prev, f, f_prev});
        p_prev = p;
        f_prev = f;
        have_prev = true;
    }

    // Bisect each bracket and keep the fundamental arcs (no interior turning
    // points of the support derivative).
    ShrinkerProfile out;
    out.params = params;
    out.symmetry_k = k;
    out.candidates_found = static_cast<int>(brackets.size());
    double root = std::numeric_limits<double>::quiet_NaN();
    for (const Bracket& br : brackets) {
        double lo = br.lo, hi = br.hi, f_lo = br.f_lo;
        for (int it = 0; it < 200 && (hi - lo) > opts.bisect_tol; ++it) {
            const double mid = 0.5 * (lo + hi);
            ArcTrajectory tr = endpoint_slope(mid);
            if (!tr.valid) throw std::runtime_error("solve_shrinker_curve: bisection left the admissible region");
            const double fm = tr.v.back();
            if (fm == 0.0) {
                lo = hi = mid;
                break;
            }
            if (fm * f_lo < 0.0) {
                hi = mid;
            } else {
                lo = mid;
                f_lo = fm;
            }
        }
        const double cand = 0.5 * (lo + hi);
        ArcTrajectory tr = endpoint_slope(cand);
        if (tr.valid && interior_turning_points(tr) == 0) {
            root = cand;
            break;  // brackets are ordered from large amplitude upward; the
                    // fundamental root is unique in the scanned range
        }
    }
    if (!std::isfinite(root))
        throw NoNontrivialSolution("solve_shrinker_curve: no nontrivial closed profile at this exponent");

    out.shoot_p = root;
    ArcTrajectory arc = endpoint_slope(root);

    // Lift the arc to the full circle by even reflection about 0 and rotation
    // by multiples of 2*pi/k, then project onto the exact symmetry class.
    // The equation residual sees truncated modes amplified by m^2 and by the
    // stiff power of h, so refinement is driven by the residual itself rather
    // than by plain tail energy.
    const double arc_len = M_PI / k;
    double best_res = std::numeric_limits<double>::infinity();
    for (std::size_t n = opts.n_samples;; n *= 2) {
        std::vector<double> samples(n);
        for (std::size_t j = 0; j < n; ++j) {
            double t = std::fmod(2.0 * M_PI * static_cast<double>(j) / static_cast<double>(n), 2.0 * arc_len);
            if (t < 0.0) t += 2.0 * arc_len;
            if (t > arc_len) t = 2.0 * arc_len - t;
            samples[j] = hermite_eval(arc, ds, t);
        }
        CircleField h = CircleField::from_samples(std::move(samples)).symmetrized(k, true);
        const double res = shrinker_residual(h, alpha).sup_norm();
        const bool improving = res < 0.25 * best_res;
        if (res < best_res) {
            best_res = res;
            out.h = std::move(h);
        }
        // stop at the round-off floor of the stiff power, or when doubling the
        // resolution no longer pays
        if (best_res <= 1e-12 || !improving || n >= 4096) break;
    }
    out.residual_sup = best_res;
    return out;
}

CircleField gauss_curvature(const CircleField& h) {
    CircleField det = radius_operator(h);
    if (!(det.min_value() > 0.0))
        throw NonConvexError("gauss_curvature: radius function must be strictly positive");
    return pointwise_pow(det, -1.0);
}

}  // namespace gcf
