// Times the batch slice engine against its serial reference on the real
// cylinder workloads and checks the two paths agree bit for bit.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "gcf/exterior.hpp"
#include "gcf/kernels.hpp"
#include "gcf/shrinker.hpp"
#include "gcf/spectrum.hpp"

using namespace gcf;

namespace {

double median_ms(const std::function<void()>& body, int reps) {
    std::vector<double> ms;
    ms.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    return ms[ms.size() / 2];
}

double max_abs_diff(const ExteriorField& a, const ExteriorField& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i)
        d = std::max(d, std::fabs(a.values()[i] - b.values()[i]));
    return d;
}

}  // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--quick") quick = true;

    const int reps = quick ? 3 : 7;
    const CylinderGrid grid{8.0, 0.02, quick ? std::size_t{601} : std::size_t{801}, 128};

    const auto prof = round_shrinker({2, 0.1});
    const auto spec = solve_spectrum(prof, 12);
    const auto ctx_par = ExteriorContext::make(prof, spec, grid, true);
    const auto ctx_ser = ExteriorContext::make(prof, spec, grid, false);

    std::printf("openmp=%s workers=%d grid=%zux%zu reps=%d\n",
                kernels::openmp_enabled() ? "on" : "off", kernels::effective_workers(), grid.ns,
                grid.ntheta, reps);

    const double gamma = choose_gamma(ctx_par);
    const auto pr = picard_zero_seed(ctx_par, gamma, {});
    const ExteriorField& w = pr.w;

    struct Case {
        const char* name;
        std::function<ExteriorField(const ExteriorContext&)> body;
    };
    const std::vector<Case> cases = {
        {"apply_linearized", [&](const ExteriorContext& c) { return apply_linearized(w, c); }},
        {"error_terms", [&](const ExteriorContext& c) { return error_terms(w, c).total; }},
        {"invert_linearized",
         [&](const ExteriorContext& c) { return invert_linearized(apply_linearized(w, c), gamma, c); }},
    };

    std::printf("%-18s %12s %12s %9s %10s\n", "op", "serial_ms", "parallel_ms", "speedup",
                "max_diff");
    bool all_equal = true;
    for (const auto& c : cases) {
        const auto ref = c.body(ctx_ser);
        const auto par = c.body(ctx_par);
        const double diff = max_abs_diff(ref, par);
        all_equal = all_equal && diff == 0.0;
        const double t_ser = median_ms([&] { (void)c.body(ctx_ser); }, reps);
        const double t_par = median_ms([&] { (void)c.body(ctx_par); }, reps);
        std::printf("%-18s %12.3f %12.3f %8.2fx %10.2e\n", c.name, t_ser, t_par, t_ser / t_par,
                    diff);
    }
    std::printf("parallel output %s the serial reference\n",
                all_equal ? "matches" : "DIFFERS from");
    return all_equal ? 0 : 1;
}
