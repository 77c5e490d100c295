#include "cli_commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "gcf/constants.hpp"
#include "gcf/exterior.hpp"
#include "gcf/json_io.hpp"
#include "gcf/kernels.hpp"
#include "gcf/march.hpp"
#include "gcf/radial.hpp"
#include "gcf/shrinker.hpp"
#include "gcf/spectrum.hpp"

namespace fs = std::filesystem;

namespace gcf_cli {
namespace {

using gcf::JsonDoc;
using gcf::num17;
using gcf::ValidationError;

// effective inputs of a run: echoed into every record and hashed (sorted,
// canonical text) so outputs can be traced back to their configuration
struct Config {
    JsonDoc doc;
    std::vector<std::pair<std::string, std::string>> kv;

    void num(std::string_view k, double v) {
        doc.put(k, v);
        kv.emplace_back(std::string(k), num17(v));
    }
    void integer(std::string_view k, long v) {
        doc.put(k, v);
        kv.emplace_back(std::string(k), std::to_string(v));
    }
    void uinteger(std::string_view k, std::size_t v) {
        doc.put(k, v);
        kv.emplace_back(std::string(k), std::to_string(v));
    }
    void str(std::string_view k, std::string_view v) {
        doc.put(k, v);
        kv.emplace_back(std::string(k), std::string(v));
    }
    void strs(std::string_view k, const std::vector<std::string>& v) {
        doc.put_strings(k, v);
        std::string joined;
        for (const auto& s : v) joined += s + ";";
        kv.emplace_back(std::string(k), joined);
    }
    std::string hash() const {
        auto sorted = kv;
        std::sort(sorted.begin(), sorted.end());
        std::string canon;
        for (const auto& [k, v] : sorted) canon += k + "=" + v + "\n";
        return gcf::hash_hex(gcf::fnv1a64(canon));
    }
};

JsonDoc record_head(std::string_view kind, const Config& cfg) {
    JsonDoc d;
    d.put("schema", kSchemaVersion);
    d.put("kind", kind);
    d.put("version", kVersion);
    d.put("config_hash", cfg.hash());
    d.put_raw("config", cfg.doc.dump_inline());
    return d;
}

struct Io {
    std::ostream& out;
    std::ostream& err;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    double wall_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    }
    // run timestamps and wall-clock live in a sidecar so the record itself is
    // a pure function of the config
    void sidecar(const std::string& path) const {
        JsonDoc meta;
        meta.put("timestamp", gcf::iso8601_utc_now());
        meta.put("wall_ms", wall_ms());
        gcf::write_text_file(path + ".meta.json", meta.dump());
    }
    void record(const std::string& path, const JsonDoc& doc, const std::string& summary) const {
        if (path.empty()) {
            out << doc.dump();
        } else {
            gcf::write_text_file(path, doc.dump());
            sidecar(path);
        }
        err << summary << "\n";
    }
    void table(const std::string& path, const std::string& csv) const {
        if (path.empty()) {
            out << csv;
        } else {
            gcf::write_text_file(path, csv);
            sidecar(path);
        }
    }
};

std::string csv_row(std::initializer_list<std::string> cells) {
    std::string row;
    bool first = true;
    for (const auto& c : cells) {
        if (!first) row += ",";
        row += c;
        first = false;
    }
    row += "\n";
    return row;
}

gcf::ShrinkerProfile make_profile(int n, double alpha, int k, std::size_t n_samples) {
    if (k != 0 && k < 3)
        throw ValidationError("the symmetry fold must be 0 (round) or at least 3");
    if (k >= 3) {
        if (n != 2) throw ValidationError("folded profiles exist only for curves (n = 2)");
        gcf::ShrinkerOptions so;
        so.n_samples = n_samples;
        return gcf::solve_shrinker_curve(alpha, k, so);
    }
    return gcf::round_shrinker({n, alpha}, n_samples);
}

// ---------------------------------------------------------------- constants

void run_constants(const Io& io, int n, double alpha, const std::string& out_path) {
    const auto dc = gcf::derive_constants({n, alpha});
    const int slow = gcf::jacobi_count_round({n, alpha});
    Config cfg;
    cfg.integer("n", n);
    cfg.num("alpha", alpha);

    JsonDoc d = record_head("constants", cfg);
    d.put("n", n);
    d.put("alpha", alpha);
    d.put("sigma", dc.sigma);
    d.put("amplitude", dc.amplitude);
    d.put("kappa", dc.kappa);
    d.put("c1", dc.c1);
    d.put("c2", dc.c2);
    d.put("K", slow);
    io.record(out_path, d,
              "constants: n=" + std::to_string(n) + " alpha=" + num17(alpha) +
                  " sigma=" + num17(dc.sigma) + " K=" + std::to_string(slow) + " (hash " +
                  cfg.hash() + ")");
}

// ----------------------------------------------------------------- shrinker

void run_shrinker(const Io& io, int n, double alpha, int k, std::size_t n_samples,
                  const std::string& out_path) {
    const auto prof = make_profile(n, alpha, k, n_samples);
    Config cfg;
    cfg.integer("n", n);
    cfg.num("alpha", alpha);
    cfg.integer("k", k);
    cfg.uinteger("samples", n_samples);

    JsonDoc d = record_head("shrinker", cfg);
    d.put("n", n);
    d.put("alpha", alpha);
    d.put("k", k);
    d.put("N", prof.h.size());
    d.put("samples", prof.h.samples());
    d.put("residual", prof.residual_sup);
    d.put("support_min", prof.shoot_p);
    io.record(out_path, d,
              "shrinker: k=" + std::to_string(k) + " residual=" + num17(prof.residual_sup) +
                  " (hash " + cfg.hash() + ")");
}

// ----------------------------------------------------------------- spectrum

void run_spectrum(const Io& io, int n, double alpha, int k, std::size_t n_samples,
                  std::size_t num, const std::string& out_path) {
    const auto prof = make_profile(n, alpha, k, n_samples);
    const auto spec = gcf::solve_spectrum(prof, num);
    Config cfg;
    cfg.integer("n", n);
    cfg.num("alpha", alpha);
    cfg.integer("k", k);
    cfg.uinteger("samples", n_samples);
    cfg.uinteger("num", num);

    std::vector<std::array<double, 2>> betas;
    betas.reserve(spec.betas.size());
    for (const auto& b : spec.betas) betas.push_back({b.beta_minus, b.beta_plus});

    JsonDoc d = record_head("spectrum", cfg);
    d.put("n", n);
    d.put("alpha", alpha);
    d.put("k", k);
    d.put("N", prof.h.size());
    d.put("lambdas", spec.lambdas);
    d.put_pairs("betas", betas);
    d.put("K", spec.slow_count);
    d.put("c_norms", spec.translation_c);
    io.record(out_path, d,
              "spectrum: k=" + std::to_string(k) + " K=" + std::to_string(spec.slow_count) +
                  " lambda0=" + num17(spec.lambdas.empty() ? 0.0 : spec.lambdas.front()) +
                  " (hash " + cfg.hash() + ")");
}

// ------------------------------------------------------------------- radial

void run_radial(const Io& io, int n, double alpha, double M, double l_max, int per_decade,
                const std::string& csv_path, const std::string& out_path) {
    if (l_max < 1e4)
        throw ValidationError("--lmax must be at least 1e4 so the asymptotic fit is meaningful");
    gcf::RadialOptions ro;
    ro.samples_per_decade = per_decade;
    const auto prof = gcf::solve_radial(M, alpha, n, l_max, ro);
    const auto dc = gcf::derive_constants({n, alpha});
    const auto fit = gcf::fit_asymptotics(prof, dc);

    Config cfg;
    cfg.integer("n", n);
    cfg.num("alpha", alpha);
    cfg.num("M", M);
    cfg.num("lmax", l_max);
    cfg.integer("per_decade", per_decade);

    std::vector<std::string> artifacts;
    if (!csv_path.empty()) {
        std::string csv = "l,f,f_l\n";
        for (const auto& s : prof.samples)
            csv += csv_row({num17(s.l), num17(s.f), num17(s.f_l)});
        io.table(csv_path, csv);
        artifacts.push_back(csv_path);
    }

    const double theory = dc.sigma + 2.0 * (dc.sigma - 1.0);
    JsonDoc d = record_head("radial", cfg);
    d.put("n", n);
    d.put("alpha", alpha);
    d.put("M", M);
    d.put("l_max", l_max);
    d.put("samples", prof.samples.size());
    d.put("tip_coefficient", prof.tip_coefficient);
    d.put("A_fit", fit.amplitude);
    d.put("A", dc.amplitude);
    d.put("ratio", fit.amplitude / dc.amplitude);
    d.put("corr_exp", fit.correction_exponent);
    d.put("corr_theory", theory);
    d.put("c_sign", fit.correction_sign);
    d.put("fit_residual", fit.relative_residual);
    d.put_strings("artifacts", artifacts);
    io.record(out_path, d,
              "radial: M=" + num17(M) + " A_fit/A=" + num17(fit.amplitude / dc.amplitude) +
                  " c_sign=" + std::to_string(fit.correction_sign) + " (hash " + cfg.hash() +
                  ")");
}

// ----------------------------------------------------------------- exterior

void run_exterior(const Io& io, int n, double alpha, int k, double R, double ds, std::size_t ns,
                  std::size_t ntheta, std::size_t num, double gamma, bool no_tilt, int max_iter,
                  const std::string& out_path) {
    const auto prof = make_profile(n, alpha, k, 128);
    const auto spec = gcf::solve_spectrum(prof, num);
    const gcf::CylinderGrid grid{R, ds, ns, ntheta};
    const auto ctx = gcf::ExteriorContext::make(prof, spec, grid, true);
    if (gamma == 0.0) gamma = gcf::choose_gamma(ctx);

    gcf::PicardOptions po;
    po.max_iter = max_iter;
    po.include_tilt = !no_tilt;
    const auto pr = gcf::picard_zero_seed(ctx, gamma, po);

    Config cfg;
    cfg.integer("n", n);
    cfg.num("alpha", alpha);
    cfg.integer("k", k);
    cfg.num("R", R);
    cfg.num("ds", ds);
    cfg.uinteger("ns", ns);
    cfg.uinteger("ntheta", ntheta);
    cfg.uinteger("num", num);
    cfg.num("gamma", gamma);
    cfg.integer("tilt", no_tilt ? 0 : 1);

    JsonDoc d = record_head("exterior", cfg);
    d.put("n", n);
    d.put("alpha", alpha);
    d.put("k", k);
    d.put("R", grid.s0);
    d.put("S_max", grid.s_max());
    d.put("gamma", pr.gamma);
    d.put("K", ctx.slow_count);
    d.put("iterations", pr.iterations);
    d.put("contraction_ratios", pr.ratios);
    d.put("increment_norms", pr.increment_norms);
    d.put("residual", pr.residual);
    io.record(out_path, d,
              "exterior: gamma=" + num17(pr.gamma) + " iters=" + std::to_string(pr.iterations) +
                  " residual=" + num17(pr.residual) + " (hash " + cfg.hash() + ")");
}

// -------------------------------------------------------------------- march

std::pair<std::size_t, double> parse_perturb(const std::string& s) {
    const auto eq = s.find('=');
    try {
        if (eq == std::string::npos) throw std::invalid_argument(s);
        const std::size_t mode = std::stoul(s.substr(0, eq));
        const double amp = std::stod(s.substr(eq + 1));
        return {mode, amp};
    } catch (const std::exception&) {
        throw ValidationError("--perturb expects MODE=AMPLITUDE, got '" + s + "'");
    }
}

const char* stop_name(gcf::MarchStop s) {
    switch (s) {
        case gcf::MarchStop::reached_target: return "reached_target";
        case gcf::MarchStop::convexity_lost: return "convexity_lost";
        default: return "graphicality_lost";
    }
}

void run_march(const Io& io, int n, double alpha, int k, const std::string& seed_kind, double M,
               double l_top, double seed_s, double target, double spacing, std::size_t cutoff,
               double R, double ds, std::size_t ns, std::size_t ntheta, std::size_t num,
               double gamma, const std::vector<std::string>& perturbs,
               const std::string& csv_path, const std::string& out_path) {
    const auto dc = gcf::derive_constants({n, alpha});
    const auto prof = make_profile(n, alpha, k, 128);

    gcf::MarchState seed;
    if (seed_kind == "radial") {
        const auto rp = gcf::solve_radial(M, alpha, n, l_top);
        seed = gcf::seed_from_radial(rp, l_top, ntheta);
    } else {
        const auto spec = gcf::solve_spectrum(prof, num);
        const gcf::CylinderGrid grid{R, ds, ns, ntheta};
        const auto ctx = gcf::ExteriorContext::make(prof, spec, grid, true);
        gcf::ExteriorField w(grid, 0.0);
        double base_gamma = gamma;
        if (seed_kind == "picard") {
            if (base_gamma == 0.0) base_gamma = gcf::choose_gamma(ctx);
            auto pr = gcf::picard_zero_seed(ctx, base_gamma, {});
            w = std::move(pr.w);
            base_gamma = pr.gamma;
            for (const auto& p : perturbs) {
                const auto [mode, amp] = parse_perturb(p);
                auto pj = gcf::jacobi_perturb(ctx, w, base_gamma, mode, amp, {});
                w = std::move(pj.w);
                base_gamma = pj.gamma;
            }
        } else if (!perturbs.empty()) {
            throw ValidationError("--perturb requires --seed picard");
        }
        const double s_at = std::isnan(seed_s) ? R : seed_s;
        seed = gcf::seed_from_exterior(w, ctx.h, dc, std::exp(s_at));
    }

    if (!(target > 0.0) || target == seed.l)
        throw ValidationError("--target must be a positive height different from the seed");
    const auto dir = target > seed.l ? gcf::MarchDirection::up : gcf::MarchDirection::down;
    gcf::MarchOptions mo;
    mo.checkpoint_log_spacing = spacing;
    mo.mode_cutoff = cutoff;
    const auto st = gcf::march(seed, target, dir, dc, mo);
    const auto rep = gcf::convergence_diagnostics(st, prof.h, dc);

    Config cfg;
    cfg.integer("n", n);
    cfg.num("alpha", alpha);
    cfg.integer("k", k);
    cfg.str("seed", seed_kind);
    cfg.num("M", M);
    cfg.num("lmax", l_top);
    cfg.num("seed_s", std::isnan(seed_s) ? R : seed_s);
    cfg.num("target", target);
    cfg.num("spacing", spacing);
    cfg.uinteger("cutoff", cutoff);
    cfg.num("R", R);
    cfg.num("ds", ds);
    cfg.uinteger("ns", ns);
    cfg.uinteger("ntheta", ntheta);
    cfg.uinteger("num", num);
    cfg.strs("perturb", perturbs);

    std::vector<std::string> artifacts;
    if (!csv_path.empty()) {
        std::string csv = "l,theta,S,S_l\n";
        for (const auto& cp : st.history)
            for (std::size_t j = 0; j < cp.S.size(); ++j)
                csv += csv_row(
                    {num17(cp.l), num17(cp.S.theta(j)), num17(cp.S[j]), num17(cp.S_l[j])});
        io.table(csv_path, csv);
        artifacts.push_back(csv_path);
    }

    JsonDoc d = record_head("march", cfg);
    d.put("n", n);
    d.put("alpha", alpha);
    d.put("k", k);
    d.put("seed", seed_kind);
    d.put("l_seed", seed.l);
    d.put("l_final", st.l);
    d.put("stop", stop_name(st.stop));
    d.put("checkpoints", st.history.size());
    d.put("heights", rep.heights);
    d.put("distances", rep.distances);
    d.put("decay_exponent", rep.decay_exponent);
    d.put("decay_theory", 2.0 * (dc.sigma - 1.0));
    d.put("decreasing_each_decade", rep.decreasing_each_decade);
    d.put_strings("artifacts", artifacts);
    io.record(out_path, d,
              std::string("march: stop=") + stop_name(st.stop) + " l=" + num17(seed.l) + " -> " +
                  num17(st.l) + " checkpoints=" + std::to_string(st.history.size()) + " (hash " +
                  cfg.hash() + ")");
}

// -------------------------------------------------------------------- sweep

std::vector<double> parse_alpha_range(const std::string& s) {
    double a = 0.0, b = 0.0, step = 0.0;
    const auto c1 = s.find(':');
    const auto c2 = s.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    try {
        if (c1 == std::string::npos || c2 == std::string::npos) throw std::invalid_argument(s);
        a = std::stod(s.substr(0, c1));
        b = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
        step = std::stod(s.substr(c2 + 1));
    } catch (const std::exception&) {
        throw ValidationError("--alphas expects START:STOP:STEP, got '" + s + "'");
    }
    if (!(a > 0.0) || !(step > 0.0) || b < a)
        throw ValidationError("--alphas needs 0 < START <= STOP and STEP > 0");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 10000) throw ValidationError("--alphas expands to more than 10000 points");
    std::vector<double> alphas(count);
    for (std::size_t i = 0; i < count; ++i) alphas[i] = a + step * static_cast<double>(i);
    return alphas;
}

void run_sweep(const Io& io, int n, const std::string& range, const std::string& what,
               std::size_t num, const std::string& out_path) {
    const auto alphas = parse_alpha_range(range);
    Config cfg;
    cfg.integer("n", n);
    cfg.str("alphas", range);
    cfg.str("what", what);
    cfg.uinteger("num", num);

    std::vector<std::string> rows(alphas.size());
    std::atomic<std::size_t> next{0};
    std::mutex fail_mu;
    std::exception_ptr failure;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= alphas.size()) return;
            try {
                const double a = alphas[i];
                if (what == "K") {
                    const auto spec = gcf::solve_spectrum(gcf::round_shrinker({n, a}, 128), num);
                    rows[i] = csv_row({num17(a), std::to_string(spec.slow_count)});
                } else if (what == "sigma") {
                    rows[i] = csv_row({num17(a), num17(gcf::derive_constants({n, a}).sigma)});
                } else {
                    rows[i] = csv_row({num17(a), num17(gcf::derive_constants({n, a}).amplitude)});
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(fail_mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(gcf::kernels::effective_workers()),
                              alphas.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    std::string csv = "# sweep schema=" + std::to_string(kSchemaVersion) + " hash=" + cfg.hash() +
                      "\nalpha," + what + "\n";
    for (const auto& r : rows) csv += r;
    io.table(out_path, csv);
    io.err << "sweep: " << alphas.size() << " points of " << what << " with "
           << workers << " workers (hash " << cfg.hash() << ")\n";
}

// ------------------------------------------------------------------- report

double jnum(const nlohmann::json& j, const char* key) {
    if (j.contains(key) && j[key].is_number()) return j[key].get<double>();
    return std::numeric_limits<double>::quiet_NaN();
}

long jint(const nlohmann::json& j, const char* key) {
    if (j.contains(key) && j[key].is_number_integer()) return j[key].get<long>();
    return 0;
}

std::string jstr(const nlohmann::json& j, const char* key) {
    if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
    return "";
}

struct SortedRows {
    // rows keyed by (n, alpha, extra, source path) so aggregation order never
    // depends on directory enumeration
    std::vector<std::tuple<long, double, double, std::string, std::string>> rows;
    void add(long n, double alpha, double extra, const std::string& path, std::string row) {
        rows.emplace_back(n, alpha, extra, path, std::move(row));
    }
    std::string emit(const std::string& header) {
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a), std::get<3>(a)) <
                   std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b));
        });
        std::string out = header;
        for (const auto& r : rows) out += std::get<4>(r);
        return out;
    }
};

void run_report(const Io& io, const std::string& dir, std::string out_dir) {
    if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir);
    if (out_dir.empty()) out_dir = (fs::path(dir) / "report").string();
    fs::create_directories(out_dir);

    std::vector<std::string> paths;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string p = e.path().string();
        if (p.size() < 5 || p.substr(p.size() - 5) != ".json") continue;
        if (p.size() >= 10 && p.substr(p.size() - 10) == ".meta.json") continue;
        paths.push_back(p);
    }
    std::sort(paths.begin(), paths.end());

    std::vector<std::pair<std::string, nlohmann::json>> records;
    std::set<long> schemas;
    for (const auto& p : paths) {
        try {
            auto j = nlohmann::json::parse(gcf::read_text_file(p));
            if (!j.contains("schema") || !j["schema"].is_number_integer())
                throw std::runtime_error("no schema field");
            schemas.insert(j["schema"].get<long>());
            records.emplace_back(p, std::move(j));
        } catch (const std::exception& ex) {
            io.err << "report: skipped unreadable " << p << " (" << ex.what() << ")\n";
        }
    }
    if (schemas.size() > 1 || (!schemas.empty() && *schemas.begin() != kSchemaVersion)) {
        std::string got;
        for (long s : schemas) got += (got.empty() ? "" : ", ") + std::to_string(s);
        throw ValidationError("schema version mismatch: found {" + got + "}, this build reads " +
                              std::to_string(kSchemaVersion));
    }

    SortedRows constants, shrinker, spectrum, staircase, radial, exterior, march, exponents;
    for (const auto& [p, j] : records) try {
        const std::string kind = jstr(j, "kind");
        const long n = jint(j, "n");
        const double alpha = jnum(j, "alpha");
        if (kind == "constants") {
            constants.add(n, alpha, 0.0, p,
                          csv_row({std::to_string(n), num17(alpha), num17(jnum(j, "sigma")),
                                   num17(jnum(j, "amplitude")), num17(jnum(j, "c1")),
                                   num17(jnum(j, "c2")), num17(jnum(j, "kappa"))}));
        } else if (kind == "shrinker") {
            shrinker.add(n, alpha, static_cast<double>(jint(j, "k")), p,
                         csv_row({std::to_string(n), num17(alpha), std::to_string(jint(j, "k")),
                                  std::to_string(jint(j, "N")), num17(jnum(j, "residual"))}));
        } else if (kind == "spectrum") {
            const long k = jint(j, "k");
            if (j.contains("lambdas") && j["lambdas"].is_array() && j.contains("betas") &&
                j["betas"].is_array() && j["betas"].size() == j["lambdas"].size()) {
                for (std::size_t i = 0; i < j["lambdas"].size(); ++i) {
                    spectrum.add(
                        n, alpha, static_cast<double>(k) * 1e6 + static_cast<double>(i), p,
                        csv_row({std::to_string(n), num17(alpha), std::to_string(k),
                                 std::to_string(i), num17(j["lambdas"][i].get<double>()),
                                 num17(j["betas"][i][0].get<double>()),
                                 num17(j["betas"][i][1].get<double>())}));
                }
            }
            staircase.add(n, alpha, static_cast<double>(k), p,
                          csv_row({std::to_string(n), num17(alpha), std::to_string(k),
                                   std::to_string(jint(j, "K"))}));
        } else if (kind == "radial") {
            radial.add(n, alpha, jnum(j, "M"), p,
                       csv_row({std::to_string(n), num17(alpha), num17(jnum(j, "M")),
                                num17(jnum(j, "l_max")), num17(jnum(j, "A_fit")),
                                num17(jnum(j, "A")), num17(jnum(j, "ratio")),
                                num17(jnum(j, "corr_exp")), num17(jnum(j, "corr_theory")),
                                std::to_string(jint(j, "c_sign"))}));
            exponents.add(n, alpha, 0.0, p,
                          csv_row({"radial", std::to_string(n), num17(alpha),
                                   num17(jnum(j, "corr_exp")), num17(jnum(j, "corr_theory")),
                                   num17(std::fabs(jnum(j, "corr_exp") - jnum(j, "corr_theory")) /
                                         std::fabs(jnum(j, "corr_theory")))}));
        } else if (kind == "exterior") {
            double final_ratio = std::numeric_limits<double>::quiet_NaN();
            if (j.contains("contraction_ratios") && j["contraction_ratios"].is_array() &&
                !j["contraction_ratios"].empty())
                final_ratio = j["contraction_ratios"].back().get<double>();
            exterior.add(n, alpha, static_cast<double>(jint(j, "k")), p,
                         csv_row({std::to_string(n), num17(alpha), std::to_string(jint(j, "k")),
                                  num17(jnum(j, "R")), num17(jnum(j, "S_max")),
                                  num17(jnum(j, "gamma")),
                                  std::to_string(jint(j, "iterations")), num17(final_ratio),
                                  num17(jnum(j, "residual"))}));
        } else if (kind == "march") {
            march.add(n, alpha, jnum(j, "l_seed"), p,
                      csv_row({std::to_string(n), num17(alpha), std::to_string(jint(j, "k")),
                               jstr(j, "seed"), num17(jnum(j, "l_seed")),
                               num17(jnum(j, "l_final")), jstr(j, "stop"),
                               num17(jnum(j, "decay_exponent")),
                               jstr(j, "stop") == "reached_target" &&
                                       j.value("decreasing_each_decade", false)
                                   ? "1"
                                   : "0"}));
            const double fitted = jnum(j, "decay_exponent");
            const double theory = jnum(j, "decay_theory");
            if (std::isfinite(fitted) && std::isfinite(theory))
                exponents.add(n, alpha, 1.0, p,
                              csv_row({"march", std::to_string(n), num17(alpha), num17(fitted),
                                       num17(theory),
                                       num17(std::fabs(fitted - theory) / std::fabs(theory))}));
        } else {
            io.err << "report: skipped record of unknown kind '" << kind << "' in " << p << "\n";
        }
    } catch (const std::exception& ex) {
        io.err << "report: skipped malformed " << p << " (" << ex.what() << ")\n";
    }

    const auto emit = [&](const char* name, SortedRows& rows, const char* header) {
        gcf::write_text_file((fs::path(out_dir) / name).string(), rows.emit(header));
    };
    emit("constants.csv", constants, "n,alpha,sigma,A,c1,c2,kappa\n");
    emit("shrinker.csv", shrinker, "n,alpha,k,N,residual\n");
    emit("spectrum.csv", spectrum, "n,alpha,k,i,lambda,beta_minus,beta_plus\n");
    emit("staircase.csv", staircase, "n,alpha,k,K\n");
    emit("radial_fits.csv", radial, "n,alpha,M,l_max,A_fit,A,ratio,corr_exp,corr_theory,c_sign\n");
    emit("exterior.csv", exterior, "n,alpha,k,R,S_max,gamma,iterations,final_ratio,residual\n");
    emit("march.csv", march, "n,alpha,k,seed,l_seed,l_final,stop,decay_exponent,decreasing\n");
    emit("exponent_fits.csv", exponents, "kind,n,alpha,fitted,theory,rel_error\n");
    io.err << "report: " << records.size() << " records -> " << out_dir << "\n";
}

// ------------------------------------------------------- config file merge

bool user_passed(const std::vector<std::string>& args, const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& a : args)
        if (a == flag || (a.size() > flag.size() && a.compare(0, flag.size() + 1, flag + "=") == 0))
            return true;
    return false;
}

// expands `--config FILE` (key=value lines) into flag tokens right after the
// subcommand name; flags given on the command line win
std::vector<std::string> merge_config_file(std::vector<std::string> args,
                                           const std::set<std::string>& subs) {
    std::string path;
    std::size_t sub_at = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (sub_at == args.size() && subs.count(args[i])) sub_at = i;
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty() || sub_at == args.size()) return args;

    std::string text;
    try {
        text = gcf::read_text_file(path);
    } catch (const std::exception& ex) {
        throw ValidationError(ex.what());
    }
    std::vector<std::string> inject;
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        auto line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = text.size();
        std::string line = text.substr(line_start, line_end - line_start);
        line_start = line_end + 1;
        const auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config file: expected key=value, got '" + line + "'");
        const std::string key = strip(line.substr(0, eq));
        const std::string val = strip(line.substr(eq + 1));
        if (key.empty()) throw ValidationError("config file: empty key in '" + line + "'");
        if (key == "config" || user_passed(args, key)) continue;
        inject.push_back("--" + key + "=" + val);
    }
    args.insert(args.begin() + static_cast<long>(sub_at) + 1, inject.begin(), inject.end());
    return args;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    const Io io{out, err};
    CLI::App app{"numerical laboratory for Gauss-curvature-flow translating solitons"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    const std::set<std::string> sub_names{"constants", "shrinker", "spectrum", "radial",
                                          "exterior", "march",    "sweep",    "report"};

    // shared option storage
    int n = 2, k = 0, per_decade = 16, max_iter = 60;
    double alpha = 0.1, M = 1.0, l_max = 1e6, l_top = 1e4, R = 8.0, ds = 0.02, gamma = 0.0;
    double seed_s = std::numeric_limits<double>::quiet_NaN(), target = 0.0, spacing = 0.02;
    std::size_t n_samples = 128, num = 12, ns = 801, ntheta = 128, cutoff = 10, sweep_num = 16;
    bool no_tilt = false;
    std::string out_path, csv_path, seed_kind = "picard", alphas_range, what, dir, out_dir,
                config_path;

    const auto common = [&](CLI::App* sub, bool with_alpha = true) {
        sub->add_option("--n", n, "hypersurface dimension")->capture_default_str();
        if (with_alpha) sub->add_option("--alpha", alpha, "curvature power")->required();
        sub->add_option("--config", config_path, "key=value config file; flags win");
        sub->add_option("-o,--output", out_path, "write the JSON record here (default: stdout)");
    };

    auto* c_const = app.add_subcommand("constants", "derived constants of the asymptotic cone");
    common(c_const);

    auto* c_shr = app.add_subcommand("shrinker", "round or k-fold shrinking profile");
    common(c_shr);
    c_shr->add_option("--k", k, "symmetry fold (0 = round)")->capture_default_str();
    c_shr->add_option("--samples", n_samples, "circle resolution")->capture_default_str();

    auto* c_spec = app.add_subcommand("spectrum", "profile eigenvalues and mode exponents");
    common(c_spec);
    c_spec->add_option("--k", k, "symmetry fold (0 = round)")->capture_default_str();
    c_spec->add_option("--samples", n_samples, "circle resolution")->capture_default_str();
    c_spec->add_option("--num", num, "eigenpairs to keep")->capture_default_str();

    auto* c_rad = app.add_subcommand("radial", "rotationally symmetric translator profile");
    common(c_rad);
    c_rad->add_option("--M", M, "tip curvature parameter")->capture_default_str();
    c_rad->add_option("--lmax", l_max, "top height")->capture_default_str();
    c_rad->add_option("--per-decade", per_decade, "samples per decade")->capture_default_str();
    c_rad->add_option("--csv", csv_path, "write (l, f, f_l) samples here");

    auto* c_ext = app.add_subcommand("exterior", "fixed-point solve on the outer cylinder");
    common(c_ext);
    c_ext->add_option("--k", k, "symmetry fold (0 = round)")->capture_default_str();
    c_ext->add_option("--R", R, "inner boundary (log height)")->capture_default_str();
    c_ext->add_option("--ds", ds, "grid spacing")->capture_default_str();
    c_ext->add_option("--ns", ns, "grid slices")->capture_default_str();
    c_ext->add_option("--ntheta", ntheta, "circle resolution")->capture_default_str();
    c_ext->add_option("--num", num, "eigenpairs to keep")->capture_default_str();
    c_ext->add_option("--gamma", gamma, "decay rate (0 = choose automatically)")
        ->capture_default_str();
    c_ext->add_option("--max-iter", max_iter, "iteration cap")->capture_default_str();
    c_ext->add_flag("--no-tilt", no_tilt, "drop the tilt factor from the defect");

    auto* c_mar = app.add_subcommand("march", "level-set integration of the support function");
    common(c_mar);
    c_mar->add_option("--k", k, "symmetry fold (0 = round)")->capture_default_str();
    c_mar->add_option("--seed", seed_kind, "seed slice: picard, cone, or radial")
        ->check(CLI::IsMember({"picard", "cone", "radial"}))
        ->capture_default_str();
    c_mar->add_option("--M", M, "tip curvature parameter (radial seed)")->capture_default_str();
    c_mar->add_option("--lmax", l_top, "radial profile top = seed height")->capture_default_str();
    c_mar->add_option("--seed-s", seed_s, "seed log-height (default: R)");
    c_mar->add_option("--target", target, "height to march to")->required();
    c_mar->add_option("--spacing", spacing, "checkpoint log spacing")->capture_default_str();
    c_mar->add_option("--cutoff", cutoff, "angular mode cutoff")->capture_default_str();
    c_mar->add_option("--R", R, "inner boundary (log height)")->capture_default_str();
    c_mar->add_option("--ds", ds, "grid spacing")->capture_default_str();
    c_mar->add_option("--ns", ns, "grid slices")->capture_default_str();
    c_mar->add_option("--ntheta", ntheta, "circle resolution")->capture_default_str();
    c_mar->add_option("--num", num, "eigenpairs to keep")->capture_default_str();
    c_mar->add_option("--gamma", gamma, "decay rate (0 = choose automatically)")
        ->capture_default_str();
    std::vector<std::string> perturbs;
    c_mar->add_option("--perturb", perturbs, "MODE=AMPLITUDE separated-mode kick (repeatable)");
    c_mar->add_option("--csv", csv_path, "write checkpoint slices here");

    auto* c_swp = app.add_subcommand("sweep", "parameter sweep to CSV");
    c_swp->add_option("--n", n, "hypersurface dimension")->capture_default_str();
    c_swp->add_option("--alphas", alphas_range, "START:STOP:STEP curvature powers")->required();
    c_swp->add_option("--what", what, "quantity per alpha")
        ->check(CLI::IsMember({"K", "sigma", "A"}))
        ->required();
    c_swp->add_option("--num", sweep_num, "eigenpairs for K")->capture_default_str();
    c_swp->add_option("--config", config_path, "key=value config file; flags win");
    c_swp->add_option("-o,--output", out_path, "write the CSV here (default: stdout)");

    auto* c_rep = app.add_subcommand("report", "aggregate records into summary tables");
    c_rep->add_option("--dir", dir, "directory of JSON records")->required();
    c_rep->add_option("--out-dir", out_dir, "table destination (default: DIR/report)");
    c_rep->add_option("--config", config_path, "key=value config file; flags win");

    c_const->callback([&] { run_constants(io, n, alpha, out_path); });
    c_shr->callback([&] { run_shrinker(io, n, alpha, k, n_samples, out_path); });
    c_spec->callback([&] { run_spectrum(io, n, alpha, k, n_samples, num, out_path); });
    c_rad->callback([&] { run_radial(io, n, alpha, M, l_max, per_decade, csv_path, out_path); });
    c_ext->callback([&] {
        run_exterior(io, n, alpha, k, R, ds, ns, ntheta, num, gamma, no_tilt, max_iter, out_path);
    });
    c_mar->callback([&] {
        run_march(io, n, alpha, k, seed_kind, M, l_top, seed_s, target, spacing, cutoff, R, ds,
                  ns, ntheta, num, gamma, perturbs, csv_path, out_path);
    });
    c_swp->callback([&] { run_sweep(io, n, alphas_range, what, sweep_num, out_path); });
    c_rep->callback([&] { run_report(io, dir, out_dir); });

    try {
        const auto args = merge_config_file(raw_args, sub_names);
        std::vector<const char*> argv;
        argv.reserve(args.size() + 1);
        argv.push_back("gcf_lab");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "solver failure: " << e.what() << "\n";
        return 3;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace gcf_cli
