#include "gcf/march.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "gcf/fit.hpp"

namespace gcf {

namespace {

namespace ode = boost::numeric::odeint;
using Vec = std::vector<double>;

// raised inside a stage when the state left the domain of the vector field;
// the step is retried with a smaller increment
struct StageBlowup {};

CircleField half_field(const Vec& y, std::size_t offset, std::size_t n) {
    std::vector<double> v(y.begin() + static_cast<long>(offset),
                          y.begin() + static_cast<long>(offset + n));
    return CircleField::from_samples(std::move(v));
}

// 0 fine, 1 slope failed, 2 convexity failed
int invariant_violation(const Vec& y, std::size_t n) {
    for (double v : y)
        if (!std::isfinite(v)) return 1;
    for (std::size_t j = 0; j < n; ++j)
        if (!(y[n + j] > 0.0)) return 1;
    const CircleField r = radius_operator(half_field(y, 0, n));
    if (!(r.min_value() > 0.0)) return 2;
    return 0;
}

}  // namespace

MarchState march(const MarchState& init, double l_target, MarchDirection dir,
                 const DerivedConstants& consts, const MarchOptions& opts) {
    const std::size_t n = init.S.size();
    if (n == 0 || init.S_l.size() != n)
        throw ValidationError("march: seed fields are empty or mismatched");
    if (!(init.l > 0.0) || !(l_target > 0.0))
        throw ValidationError("march: heights must be positive");
    const double sgn = dir == MarchDirection::up ? 1.0 : -1.0;
    if (!(sgn * (l_target - init.l) > 0.0))
        throw ValidationError("march: target does not lie in the marching direction");
    // curve constants: the tilt exponent determines the curvature power
    const double inv_a = 2.0 / (1.0 - consts.sigma);
    if (std::fabs(consts.kappa - (2.0 - 0.5 * inv_a)) > 1e-9)
        throw ValidationError("march: constants do not describe a curve flow");

    if (!(init.S_l.min_value() > 0.0))
        throw GraphicalityLost("march: seed slope is not positive");
    if (!(radius_operator(init.S).min_value() > 0.0))
        throw ConvexityLost("march: seed is not strictly convex");

    const double kap = consts.kappa;
    CircleField scratch(n);
    auto rhs = [&](const Vec& y, Vec& dy, double) {
        for (std::size_t j = 0; j < n; ++j) {
            const double sl = y[n + j];
            if (!(sl > 0.0) || !std::isfinite(sl) || !std::isfinite(y[j])) throw StageBlowup{};
            scratch[j] = y[j];
        }
        const CircleField r = radius_operator(scratch);
        dy.resize(2 * n);
        for (std::size_t j = 0; j < n; ++j) {
            const double sl = y[n + j];
            dy[j] = sl;
            dy[n + j] = -std::pow(1.0 + sl * sl, kap) * std::pow(sl, inv_a) * r[j];
        }
    };

    MarchState out = init;
    Vec y(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        y[j] = init.S[j];
        y[n + j] = init.S_l[j];
    }
    double l = init.l;

    auto filter = [&](Vec& v) {
        if (opts.mode_cutoff >= n / 2) return;
        const CircleField s = half_field(v, 0, n).lowpass(opts.mode_cutoff);
        const CircleField sl = half_field(v, n, n).lowpass(opts.mode_cutoff);
        for (std::size_t j = 0; j < n; ++j) {
            v[j] = s[j];
            v[n + j] = sl[j];
        }
    };
    auto record = [&](double height) {
        out.history.push_back({height, half_field(y, 0, n), half_field(y, n, n)});
    };
    if (out.history.empty()) record(l);

    const double s_seed = std::log(l);
    long k_next = 1;
    auto cp_height = [&](long k) {
        return std::exp(s_seed + sgn * opts.checkpoint_log_spacing * static_cast<double>(k));
    };

    auto ctrl = ode::make_controlled(opts.abs_tol, opts.rel_tol,
                                     ode::runge_kutta_dopri5<Vec>());
    double dt = sgn * 1e-3 * l;
    int last_violation = 0;

    while (sgn * (l_target - l) > 1e-12 * l_target) {
        double cp_l = cp_height(k_next);
        if (sgn * (cp_l - l) <= 1e-12 * l) {  // already past a checkpoint height
            ++k_next;
            continue;
        }
        const double stop_l = sgn > 0.0 ? std::min(l_target, cp_l) : std::max(l_target, cp_l);
        const double mag =
            std::min({std::fabs(dt), opts.max_step_frac * l, sgn * (stop_l - l)});
        dt = sgn * mag;

        Vec ytry = y;
        double ltry = l;
        double dtry = dt;
        bool ok = false;
        int kind = 0;
        try {
            ok = ctrl.try_step(rhs, ytry, ltry, dtry) == ode::success;
            if (ok) {
                kind = invariant_violation(ytry, n);
                if (kind != 0) {
                    ok = false;
                    dtry = 0.5 * dt;
                }
            }
        } catch (const StageBlowup&) {
            ok = false;
            kind = 1;
            dtry = 0.5 * dt;
        }
        if (!ok) {
            last_violation = kind != 0 ? kind : last_violation;
            dt = dtry;
            if (std::fabs(dt) < 1e-13 * l) {
                if (last_violation == 0)
                    throw StepUnderflow("march: step size collapsed at l = " + std::to_string(l));
                out.stop = last_violation == 1 ? MarchStop::graphicality_lost
                                               : MarchStop::convexity_lost;
                for (std::size_t j = 0; j < n; ++j) {
                    out.S[j] = y[j];
                    out.S_l[j] = y[n + j];
                }
                out.l = l;
                return out;
            }
            continue;
        }

        last_violation = 0;
        filter(ytry);
        y = std::move(ytry);
        l = ltry;
        dt = dtry;
        if (std::fabs(l - stop_l) <= 1e-12 * std::fabs(stop_l)) l = stop_l;
        if (l == cp_l) {
            record(l);
            ++k_next;
        }
    }

    for (std::size_t j = 0; j < n; ++j) {
        out.S[j] = y[j];
        out.S_l[j] = y[n + j];
    }
    out.l = l;
    out.stop = MarchStop::reached_target;
    return out;
}

MarchState seed_from_exterior(const ExteriorField& w, const CircleField& h,
                              const DerivedConstants& consts, double l_start) {
    const CylinderGrid& g = w.grid();
    if (!(l_start > 0.0)) throw ValidationError("seed_from_exterior: l_start must be positive");
    const double jr = (std::log(l_start) - g.s0) / g.ds;
    const long j = std::lround(jr);
    if (j < 0 || j >= static_cast<long>(g.ns) || std::fabs(jr - static_cast<double>(j)) > 1e-9)
        throw ValidationError("seed_from_exterior: l_start does not land on a grid slice");
    const CircleField hh = h.size() == g.ntheta ? h : h.resampled(g.ntheta);

    const CircleField ws = w.d_s().slice(static_cast<std::size_t>(j));
    const CircleField wj = w.slice(static_cast<std::size_t>(j));
    const double lead = consts.amplitude * std::pow(l_start, consts.sigma);

    MarchState st;
    st.l = l_start;
    st.S = CircleField(g.ntheta);
    st.S_l = CircleField(g.ntheta);
    for (std::size_t k = 0; k < g.ntheta; ++k) {
        st.S[k] = lead * hh[k] + wj[k];
        st.S_l[k] = (consts.sigma * lead * hh[k] + ws[k]) / l_start;
    }
    return st;
}

MarchState seed_from_radial(const RadialProfile& p, double l, std::size_t ntheta) {
    if (p.params.n != 2)
        throw ValidationError("seed_from_radial: only curve profiles can be marched");
    const RadialSample* hit = nullptr;
    for (const auto& s : p.samples)
        if (std::fabs(s.l - l) <= 1e-9 * l) {
            hit = &s;
            break;
        }
    if (hit == nullptr)
        throw ValidationError("seed_from_radial: l is not a sample height of the profile");
    MarchState st;
    st.l = hit->l;
    st.S = CircleField(ntheta, hit->f);
    st.S_l = CircleField(ntheta, hit->f_l);
    return st;
}

ConvergenceReport convergence_diagnostics(const MarchState& st, const CircleField& h,
                                          const DerivedConstants& consts) {
    if (st.history.empty())
        throw ValidationError("convergence_diagnostics: the run recorded no checkpoints");
    const std::size_t n = st.history.front().S.size();
    const CircleField hh = h.size() == n ? h : h.resampled(n);

    ConvergenceReport rep;
    std::vector<double> ln_l, ln_d;
    for (const auto& cp : st.history) {
        const double lead = consts.amplitude * std::pow(cp.l, consts.sigma);
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            d = std::max(d, std::fabs(cp.S[j] / lead - hh[j]));
        rep.heights.push_back(cp.l);
        rep.distances.push_back(d);
        if (d > 0.0) {
            ln_l.push_back(std::log(cp.l));
            ln_d.push_back(std::log(d));
        }
    }
    if (ln_l.size() >= 2) rep.decay_exponent = fit_line(ln_l, ln_d).slope;

    // compare each checkpoint with the first one at least a decade above it
    std::vector<std::size_t> order(rep.heights.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return rep.heights[a] < rep.heights[b]; });
    bool any = false, all = true;
    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            if (rep.heights[order[b]] < 10.0 * rep.heights[order[a]]) continue;
            any = true;
            if (!(rep.distances[order[b]] < rep.distances[order[a]])) all = false;
            break;
        }
    }
    rep.decreasing_each_decade = any && all;
    return rep;
}

double paired_difference_exponent(const MarchState& a, const MarchState& b) {
    const std::size_t m = std::min(a.history.size(), b.history.size());
    std::vector<double> ln_l, ln_d;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& ca = a.history[i];
        const auto& cb = b.history[i];
        if (std::fabs(ca.l - cb.l) > 1e-9 * ca.l)
            throw ValidationError("paired_difference_exponent: checkpoint grids differ");
        double d = 0.0;
        for (std::size_t j = 0; j < ca.S.size(); ++j)
            d = std::max(d, std::fabs(ca.S[j] - cb.S[j]));
        if (d > 0.0) {
            ln_l.push_back(std::log(ca.l));
            ln_d.push_back(std::log(d));
        }
    }
    if (ln_l.size() < 2)
        throw ValidationError("paired_difference_exponent: need at least two matching checkpoints");
    return fit_line(ln_l, ln_d).slope;
}

}  // namespace gcf
