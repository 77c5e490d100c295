#include "gcf/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "gcf/circle_field.hpp"
#include "gcf/fit.hpp"

namespace gcf {

namespace {

namespace ode = boost::numeric::odeint;
using State = std::array<double, 2>;

void guard_state(const State& s, const char* chart) {
    if (!std::isfinite(s[0]) || !std::isfinite(s[1]))
        throw NonConvexError(std::string("solve_radial: overflow in the ") + chart + " chart");
    if (s[1] <= 0.0)
        throw NonConvexError(std::string("solve_radial: slope lost positivity in the ") +
                             chart + " chart");
}

}  // namespace

RadialProfile solve_radial(double M, double alpha, int n, double l_max,
                           const RadialOptions& opts) {
    if (!(M > 0.0))
        throw ValidationError("solve_radial: M must be positive");
    const FlowParams params{n, alpha};
    const DerivedConstants dc = derive_constants(params);
    if (!(l_max > 1.0))
        throw ValidationError("solve_radial: l_max must exceed 1");
    if (opts.samples_per_decade < 2)
        throw ValidationError("solve_radial: need at least 2 samples per decade");

    const double nd = static_cast<double>(n);
    const double kap = dc.kappa;
    const double inv_a = 1.0 / alpha;

    // tip series in the graph chart: u(r) = (c/2) r^2 (1 + d r^2 + O(r^4)),
    // with the opening c fixed by the zero-gradient balance of the equation
    const double r0 = 1e-6;
    const double c_tip = std::pow(M, kap / nd);
    const double d_tip = kap * c_tip * c_tip / ((2.0 * nd + 4.0) * M);
    State y{0.5 * c_tip * r0 * r0 * (1.0 + d_tip * r0 * r0),
            c_tip * r0 * (1.0 + 2.0 * d_tip * r0 * r0)};

    // geometric sample grid; the floor sits a couple of octaves above the
    // seed point so the first sample is still deep in the series regime
    std::vector<double> targets;
    const double grow = std::pow(10.0, 1.0 / opts.samples_per_decade);
    const double l_floor = 16.0 * y[0];
    if (l_max <= l_floor)
        throw ValidationError("solve_radial: l_max lies inside the tip region");
    for (double l = l_max; l >= l_floor; l /= grow) targets.push_back(l);
    std::reverse(targets.begin(), targets.end());

    RadialProfile out;
    out.params = params;
    out.M = M;
    out.tip_coefficient = c_tip;
    out.samples.reserve(targets.size());
    std::size_t next = 0;

    // graph chart: u''(u'/r)^(n-1) = (M + u'^2)^kappa, regular through the tip
    auto graph_rhs = [M, kap, nd](const State& s, State& ds, double r) {
        const double p = s[1];
        ds[0] = p;
        ds[1] = std::pow(M + p * p, kap) * std::pow(r / p, nd - 1.0);
    };
    const double p_switch = 1.0 / opts.slope_handover;

    auto graph = ode::make_dense_output(opts.abs_tol, opts.rel_tol,
                                        ode::runge_kutta_dopri5<State>());
    graph.initialize(y, r0, 0.25 * r0);
    while (graph.current_state()[1] < p_switch && graph.current_state()[0] < l_max) {
        graph.do_step(graph_rhs);
        guard_state(graph.current_state(), "graph");
        // emit every sample the step crossed: solve u(r) = l on the dense output
        while (next < targets.size() && targets[next] <= graph.current_state()[0]) {
            double a = graph.previous_time(), b = graph.current_time();
            State yi;
            for (int it = 0; it < 120 && b - a > 1e-15 * b; ++it) {
                const double mid = 0.5 * (a + b);
                graph.calc_state(mid, yi);
                (yi[0] < targets[next] ? a : b) = mid;
            }
            const double r = 0.5 * (a + b);
            graph.calc_state(r, yi);
            out.samples.push_back({targets[next], r, 1.0 / yi[1]});
            ++next;
        }
    }
    out.handover_l = graph.current_state()[0];

    if (out.handover_l < l_max) {
        // support chart: f'' = -(1 + M f'^2)^kappa f'^(1/alpha) f^(n-1)
        auto support_rhs = [M, kap, nd, inv_a](const State& s, State& ds, double) {
            const double f = s[0], q = s[1];
            ds[0] = q;
            ds[1] = -std::pow(1.0 + M * q * q, kap) * std::pow(q, inv_a) *
                    std::pow(f, nd - 1.0);
        };
        State z{graph.current_time(), 1.0 / graph.current_state()[1]};
        auto sup = ode::make_dense_output(opts.abs_tol, opts.rel_tol,
                                          ode::runge_kutta_dopri5<State>());
        sup.initialize(z, out.handover_l, 1e-3 * out.handover_l);
        while (sup.current_time() < l_max) {
            sup.do_step(support_rhs);
            guard_state(sup.current_state(), "support");
            while (next < targets.size() && targets[next] <= sup.current_time()) {
                State yi;
                sup.calc_state(targets[next], yi);
                out.samples.push_back({targets[next], yi[0], yi[1]});
                ++next;
            }
        }
    }
    if (next != targets.size())
        throw NonConvexError("solve_radial: integration stopped before the last sample");
    return out;
}

double profile_f_ll(const RadialProfile& p, const RadialSample& s) {
    const DerivedConstants dc = derive_constants(p.params);
    return -std::pow(1.0 + p.M * s.f_l * s.f_l, dc.kappa) *
           std::pow(s.f_l, 1.0 / p.params.alpha) *
           std::pow(s.f, static_cast<double>(p.params.n) - 1.0);
}

AsymptoticFit fit_asymptotics(const RadialProfile& p, const DerivedConstants& c) {
    if (p.samples.empty() || p.l_max() < 0.999e4)
        throw ValidationError("fit_asymptotics: profile must reach at least l = 1e4");
    const double sigma = c.sigma;
    const double e_corr = sigma + 2.0 * (sigma - 1.0);
    const double lo = p.l_max() / 100.0;

    // two-parameter least squares  f ~ a l^sigma + b l^e_corr  on the window,
    // plus a log-log slope of the remainder against the closed-form leading term
    double xx = 0, xy = 0, yy = 0, xf = 0, yf = 0;
    std::vector<double> ln_l, ln_rem;
    for (const auto& s : p.samples) {
        if (s.l < lo) continue;
        const double x = std::pow(s.l, sigma);
        const double yv = std::pow(s.l, e_corr);
        xx += x * x;
        xy += x * yv;
        yy += yv * yv;
        xf += x * s.f;
        yf += yv * s.f;
        const double rem = s.f - c.amplitude * x;
        if (rem != 0.0) {
            ln_l.push_back(std::log(s.l));
            ln_rem.push_back(std::log(std::fabs(rem)));
        }
    }
    const double det = xx * yy - xy * xy;
    if (!(std::fabs(det) > 0.0))
        throw ValidationError("fit_asymptotics: degenerate design matrix");

    AsymptoticFit out;
    out.amplitude = (xf * yy - yf * xy) / det;
    out.correction_coefficient = (xx * yf - xy * xf) / det;
    out.correction_sign =
        out.correction_coefficient > 0.0 ? 1 : (out.correction_coefficient < 0.0 ? -1 : 0);
    out.correction_exponent = fit_line(ln_l, ln_rem).slope;

    double ss = 0.0, cc = 0.0;
    for (const auto& s : p.samples) {
        if (s.l < lo) continue;
        const double corr = out.correction_coefficient * std::pow(s.l, e_corr);
        const double model = out.amplitude * std::pow(s.l, sigma) + corr;
        ss += (s.f - model) * (s.f - model);
        cc += corr * corr;
    }
    out.relative_residual = cc > 0.0 ? std::sqrt(ss / cc) : std::numeric_limits<double>::infinity();
    if (!(out.relative_residual <= 0.1))
        throw ValidationError("fit_asymptotics: residual exceeds 10% of the correction term");
    return out;
}

BarrierReport barrier_check(double M, const ShrinkerProfile& hp, const DerivedConstants& c,
                            BarrierSide side) {
    const FlowParams par = hp.params;
    const CircleField& h = hp.h;
    CircleField detr;
    if (par.n == 2) {
        detr = radius_determinant(h);
    } else {
        // only rotationally symmetric profiles carry to higher dimensions here
        if (h.max_value() - h.min_value() > 1e-10 * h.sup_norm())
            throw ValidationError("barrier_check: non-constant profiles require n = 2");
        detr = pointwise_pow(h, static_cast<double>(par.n - 1));
    }

    const RadialProfile prof = solve_radial(M, par.alpha, par.n, 1e4);
    const double inv_a = 1.0 / par.alpha;
    const double nd = static_cast<double>(par.n);

    BarrierReport rep;
    rep.grid_l = prof.samples.size();
    rep.grid_theta = h.size();
    const double sup2 = h.max_value() * h.max_value();
    const double inf2 = h.min_value() * h.min_value();
    rep.threshold = side == BarrierSide::sub ? sup2 : inf2;
    rep.threshold_met = side == BarrierSide::sub ? M >= sup2 : M <= inf2;

    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (const auto& s : prof.samples) {
        const double q = s.f_l, fpow = std::pow(s.f, nd - 1.0);
        const double f_ll = -std::pow(1.0 + M * q * q, c.kappa) * std::pow(q, inv_a) * fpow;
        for (std::size_t j = 0; j < h.size(); ++j) {
            const double hv = h[j];
            const double qh = q * hv;
            const double t1 = f_ll * hv;
            const double t2 =
                std::pow(1.0 + qh * qh, c.kappa) * std::pow(qh, inv_a) * fpow * detr[j];
            const double scale = std::fabs(t1) + std::fabs(t2);
            const double res = scale > 0.0 ? (t1 + t2) / scale : 0.0;
            mn = std::min(mn, res);
            mx = std::max(mx, res);
        }
    }
    rep.min_residual = mn;
    rep.max_residual = mx;
    rep.sign_holds = side == BarrierSide::sub ? mn >= 0.0 : mx <= 0.0;
    return rep;
}

}  // namespace gcf
