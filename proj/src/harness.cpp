#include "pricefb/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "pricefb/fitting.hpp"
#include "pricefb/svg.hpp"

namespace pricefb {

using nlohmann::json;

namespace {

// --- SHA-1, for the git-style content hash of configs ---------------------

struct Sha1 {
    std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
    std::uint64_t total = 0;
    unsigned char block[64];
    size_t fill = 0;

    static std::uint32_t rol(std::uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

    void process(const unsigned char* p) {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i) {
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        }
        for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            const std::uint32_t t = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = t;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    void update(const void* data, size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        total += len;
        while (len > 0) {
            const size_t take = std::min(len, 64 - fill);
            std::memcpy(block + fill, p, take);
            fill += take;
            p += take;
            len -= take;
            if (fill == 64) {
                process(block);
                fill = 0;
            }
        }
    }

    std::string hex() {
        const std::uint64_t bits = total * 8;
        unsigned char pad = 0x80;
        update(&pad, 1);
        unsigned char zero = 0;
        while (fill != 56) update(&zero, 1);
        unsigned char len[8];
        for (int i = 0; i < 8; ++i) len[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update(len, 8);
        std::string out;
        for (std::uint32_t v : h) {
            char buf[9];
            std::snprintf(buf, sizeof(buf), "%08x", v);
            out += buf;
        }
        return out;
    }
};

double uniform01(std::mt19937_64& rng) {
    // explicit mapping keeps outputs identical across standard libraries
    return (rng() >> 11) * 0x1.0p-53;
}

double record_err(const TrajectoryRecord& r, const std::string& norm_kind) {
    if (norm_kind == "l2") return r.err.l2;
    if (norm_kind == "h1") return r.err.h1;
    if (norm_kind == "linf") return r.err.linf;
    fail(errc::config_error, "unknown norm kind: " + norm_kind);
}

double gap_for_lengths(double Aeff, double Beff, double a) {
    const double g = std::min({M_PI / a, 2.0 * M_PI / (2.0 * Aeff - a),
                               2.0 * M_PI / (2.0 * Beff - a)});
    return g * g;
}

/// First eigenfunction of the operator linearized at an equilibrium with
/// root p0: effective lengths A+p0, B-p0, shifted coordinate.  Built
/// without the a < min(A,B)/2 check so off-center equilibria work too.
GridFunction sample_first_eigenfunction(const Equilibrium& eq, const Grid& g) {
    const ModelParams& prm = g.params();
    const double Aeff = prm.A + eq.p0, Beff = prm.B - eq.p0, a = prm.a;
    if (!(Aeff > a && Beff > a)) {
        fail(errc::config_error, "equilibrium too close to the boundary for an eigenfunction");
    }
    const double alpha = std::min({M_PI / a, 2.0 * M_PI / (2.0 * Aeff - a),
                                   2.0 * M_PI / (2.0 * Beff - a)});
    ModelParams shifted = prm;
    shifted.A = Aeff;
    shifted.B = Beff;
    const auto pair = matching_rank_relaxed(alpha, shifted);
    if (!pair) fail(errc::config_error, "no eigenfunction at the leading candidate");

    std::vector<double> weights(pair->dim, 0.0);
    weights[0] = 1.0;
    if (pair->dim >= 2 && std::abs(Aeff - Beff) <= 1e-12 * (Aeff + Beff)) {
        // pick the odd-parity member: null vector of the even-part probe matrix
        const double probes[5] = {0.0, 0.3 * a, 0.7 * a, a + 0.25 * (Beff - a),
                                  a + 0.75 * (Beff - a)};
        Eigen::MatrixXd E(5, pair->dim);
        for (int j = 0; j < 5; ++j) {
            for (int k = 0; k < pair->dim; ++k) {
                E(j, k) = 0.5 * (pair->eval(k, probes[j]) + pair->eval(k, -probes[j]));
            }
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        if (sv[pair->dim - 1] <= 1e-6 * sv[0]) {
            for (int k = 0; k < pair->dim; ++k) weights[k] = svd.matrixV()(k, pair->dim - 1);
        }
    }
    return sample(g, [&](double x) {
        double v = 0.0;
        const double xi = std::clamp(x - eq.p0, -Aeff, Beff);
        for (int k = 0; k < pair->dim; ++k) v += weights[k] * pair->eval(k, xi);
        return v;
    });
}

GridFunction sample_kernel_shift(const PerturbationSpec& spec, const Equilibrium& eq,
                                 const Grid& g) {
    if (spec.c == 0.0 && spec.d == 0.0) {
        fail(errc::config_error, "kernel-shift perturbation needs nonzero c or d");
    }
    const double a = g.params().a;
    return sample(g, [&](double x) {
        const double xi = x - eq.p0;
        const double g0 = std::clamp(xi, -a, a);
        double h0;
        if (xi == a || xi == -a) {
            h0 = 1.5;
        } else {
            h0 = (std::abs(xi) < a) ? 1.0 : 2.0;
        }
        return spec.c * g0 + spec.d * h0;
    });
}

void normalize_to_amplitude(GridFunction& f, double amplitude, bool canonical_sign) {
    double mx = 0.0;
    int idx = 0;
    for (int i = 0; i < f.size(); ++i) {
        if (std::abs(f.values[i]) > mx) {
            mx = std::abs(f.values[i]);
            idx = i;
        }
    }
    if (mx == 0.0) fail(errc::config_error, "perturbation shape is identically zero");
    double scale = amplitude / mx;
    // eigenvector shapes carry an arbitrary sign; pin it for reproducibility
    if (canonical_sign && f.values[idx] < 0.0) scale = -scale;
    for (auto& v : f.values) v *= scale;
}

}  // namespace

std::string content_hash(const std::string& text) {
    Sha1 s;
    const std::string header = "blob " + std::to_string(text.size());
    s.update(header.data(), header.size() + 1);  // include the NUL
    s.update(text.data(), text.size());
    return s.hex();
}

const char* perturbation_kind_name(PerturbationKind k) noexcept {
    switch (k) {
        case PerturbationKind::none: return "none";
        case PerturbationKind::first_eigenfunction: return "first-eigenfunction";
        case PerturbationKind::smooth_cosine: return "smooth-cosine";
        case PerturbationKind::random_smooth: return "random-smooth";
        case PerturbationKind::kernel_shift: return "kernel-shift";
    }
    return "?";
}

PerturbationKind parse_perturbation_kind(const std::string& name) {
    for (PerturbationKind k :
         {PerturbationKind::none, PerturbationKind::first_eigenfunction,
          PerturbationKind::smooth_cosine, PerturbationKind::random_smooth,
          PerturbationKind::kernel_shift}) {
        if (name == perturbation_kind_name(k)) return k;
    }
    fail(errc::config_error, "unknown perturbation kind: " + name);
}

Equilibrium ScenarioConfig::baseline() const {
    if (equilibrium && masses) {
        fail(errc::config_error, "specify either masses or an equilibrium, not both");
    }
    if (equilibrium) {
        validate_equilibrium(*equilibrium, params);
        return *equilibrium;
    }
    if (masses) return equilibrium_from_masses(*masses, params);
    fail(errc::config_error, "config needs m1/m2 or an equilibrium");
}

double ScenarioConfig::resolved_dt(const Grid& g) const {
    const double v = dt.value_or(g.spacing());
    if (!(v > 0.0) || v > g.spacing() * (1.0 + 1e-12)) {
        fail(errc::config_error, "dt must satisfy 0 < dt <= h");
    }
    return v;
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
    ScenarioConfig cfg;
    try {
        cfg.params.A = j.value("A", cfg.params.A);
        cfg.params.B = j.value("B", cfg.params.B);
        cfg.params.a = j.value("a", cfg.params.a);
        cfg.params.D = j.value("D", cfg.params.D);
        if (j.contains("m1") || j.contains("m2")) {
            cfg.masses = MassPair{j.at("m1").get<double>(), j.at("m2").get<double>()};
        }
        if (j.contains("equilibrium")) {
            const auto& e = j.at("equilibrium");
            cfg.equilibrium = Equilibrium{e.at("p0").get<double>(), e.at("lambda0").get<double>()};
        }
        if (j.contains("perturbation")) {
            const auto& p = j.at("perturbation");
            cfg.perturbation.kind = parse_perturbation_kind(p.value("kind", "none"));
            cfg.perturbation.amplitude = p.value("amplitude", 0.0);
            cfg.perturbation.c = p.value("c", 1.0);
            cfg.perturbation.d = p.value("d", 0.0);
        }
        cfg.n = j.value("n", cfg.n);
        if (j.contains("dt") && !j.at("dt").is_null()) cfg.dt = j.at("dt").get<double>();
        cfg.t_end = j.value("t_end", cfg.t_end);
        cfg.stride = j.value("stride", cfg.stride);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("scheme")) {
            const auto& s = j.at("scheme");
            cfg.scheme.crank_nicolson = s.value("crank_nicolson", false);
            cfg.scheme.midpoint_corrector = s.value("corrector", false);
        }
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            cfg.fit.norm = f.value("norm", cfg.fit.norm);
            if (f.contains("window") && !f.at("window").is_null()) {
                cfg.fit.window = {f.at("window").at(0).get<double>(),
                                  f.at("window").at(1).get<double>()};
            }
        }
        cfg.plots = j.value("plots", cfg.plots);
    } catch (const json::exception& e) {
        fail(errc::config_error, std::string("bad config JSON: ") + e.what());
    }
    return cfg;
}

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(errc::config_error, "cannot open config: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        fail(errc::config_error, std::string("cannot parse config JSON: ") + e.what());
    }
    return from_json(j);
}

json ScenarioConfig::to_json() const {
    json j;
    j["A"] = params.A;
    j["B"] = params.B;
    j["a"] = params.a;
    j["D"] = params.D;
    if (masses) {
        j["m1"] = masses->m1;
        j["m2"] = masses->m2;
    }
    if (equilibrium) j["equilibrium"] = {{"p0", equilibrium->p0}, {"lambda0", equilibrium->lambda0}};
    j["perturbation"] = {{"kind", perturbation_kind_name(perturbation.kind)},
                         {"amplitude", perturbation.amplitude},
                         {"c", perturbation.c},
                         {"d", perturbation.d}};
    j["n"] = n;
    if (dt) j["dt"] = *dt;
    j["t_end"] = t_end;
    j["stride"] = stride;
    j["out_dir"] = out_dir;
    j["seed"] = seed;
    j["scheme"] = {{"crank_nicolson", scheme.crank_nicolson},
                   {"corrector", scheme.midpoint_corrector}};
    j["fit"] = {{"norm", fit.norm}};
    if (fit.window) j["fit"]["window"] = {fit.window->first, fit.window->second};
    j["plots"] = plots;
    return j;
}

DecayFit fit_decay(const Trajectory& traj, const std::string& norm_kind,
                   std::pair<double, double> window) {
    std::vector<double> ts, ls;
    for (const auto& r : traj.records) {
        if (r.t < window.first - 1e-15 || r.t > window.second + 1e-15) continue;
        const double e = record_err(r, norm_kind);
        if (!(e > 0.0)) {
            fail(errc::nonpositive_error,
                 "error value " + format_full(e) + " at t = " + format_full(r.t) +
                     " in the fit window (error floor reached; shrink the window)");
        }
        ts.push_back(r.t);
        ls.push_back(std::log(e));
    }
    if (ts.size() < 2) fail(errc::invalid_params, "fit window contains fewer than 2 records");
    const LineFit lf = fit_line(ts, ls);
    DecayFit out;
    out.defined = true;
    out.gamma_fit = -lf.slope;
    out.c_fit = std::exp(lf.intercept);
    out.window = window;
    out.residual = lf.rms;
    out.norm_kind = norm_kind;
    return out;
}

std::pair<double, double> default_fit_window(const Trajectory& traj, const std::string& norm_kind,
                                             double gap, double t_end, double error_floor) {
    double t_lo = 0.2 / gap;
    double t_hi = std::min(t_end, 3.0 / gap);
    // node-aligned configs can have an exactly-zero fixed-point residual, so
    // keep a tiny absolute floor; runs that never rise above it get an empty
    // window and the caller flags the fit undefined
    const double cut = 10.0 * std::max(error_floor, 1e-15);
    double last_above = t_lo;
    for (const auto& r : traj.records) {
        if (r.t < t_lo || r.t > t_hi) continue;
        if (record_err(r, norm_kind) >= cut) last_above = r.t;
    }
    t_hi = std::max(t_lo, std::min(t_hi, last_above));
    return {t_lo, t_hi};
}

GridFunction build_perturbation(const PerturbationSpec& spec, const Equilibrium& eq,
                                const Grid& g, std::uint64_t seed) {
    if (spec.kind == PerturbationKind::none || spec.amplitude == 0.0) {
        return GridFunction(g);
    }
    if (!(spec.amplitude > 0.0)) fail(errc::config_error, "perturbation amplitude must be >= 0");
    GridFunction f(g);
    const ModelParams& prm = g.params();
    switch (spec.kind) {
        case PerturbationKind::first_eigenfunction:
            f = sample_first_eigenfunction(eq, g);
            break;
        case PerturbationKind::smooth_cosine: {
            const double w = M_PI / prm.length();
            f = sample(g, [&](double x) { return std::cos(w * (x + prm.A)); });
            break;
        }
        case PerturbationKind::random_smooth: {
            std::mt19937_64 rng(seed);
            std::array<double, 6> coeff{};
            for (int k = 0; k < 6; ++k) {
                coeff[k] = (2.0 * uniform01(rng) - 1.0) / ((k + 1.0) * (k + 1.0));
            }
            f = sample(g, [&](double x) {
                double v = 0.0;
                for (int k = 0; k < 6; ++k) {
                    v += coeff[k] * std::cos((k + 1) * M_PI * (x + prm.A) / prm.length());
                }
                return v;
            });
            break;
        }
        case PerturbationKind::kernel_shift:
            f = sample_kernel_shift(spec, eq, g);
            break;
        case PerturbationKind::none:
            break;
    }
    normalize_to_amplitude(f, spec.amplitude,
                           spec.kind == PerturbationKind::first_eigenfunction);
    return f;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    validate_params(cfg.params);
    const Equilibrium base = cfg.baseline();
    const Grid grid(cfg.params, cfg.n);
    const double dt = cfg.resolved_dt(grid);

    const GridFunction pert = build_perturbation(cfg.perturbation, base, grid, cfg.seed);
    GridFunction f_I = sample(grid, base);
    for (int i = 0; i < f_I.size(); ++i) f_I.values[i] += pert.values[i];

    SimState s0 = init_state(f_I, base.p0);
    const Equilibrium predicted = predict_limit(f_I, s0.p, cfg.params);
    const GridFunction f_inf = sample(grid, predicted);

    ScenarioResult res{.cfg = cfg,
                       .baseline = base,
                       .predicted = predicted,
                       .initial_masses = side_masses(f_I, s0.p),
                       .trajectory = {},
                       .decay = {},
                       .initial_state = f_I,
                       .predicted_state = f_inf};
    res.guard_warning = s0.smallness_warning;
    res.boundary_mass_warning =
        cfg.masses.has_value() && at_admissibility_boundary(*cfg.masses, cfg.params);
    res.spectral_gap_value = spectral_gap(cfg.params);

    // one-step residual of the sampled limit, the discretization error floor
    try {
        const SimState se = init_state(f_inf, predicted.p0);
        const SimState s1 = step(se, dt, cfg.scheme);
        double r = 0.0;
        for (int i = 0; i < f_inf.size(); ++i) {
            r = std::max(r, std::abs(s1.f.values[i] - f_inf.values[i]));
        }
        res.fixed_point_residual = r;
    } catch (const Error&) {
        res.fixed_point_residual = 0.0;
    }

    res.trajectory = run(s0, dt, cfg.t_end, f_inf, cfg.stride, cfg.scheme);

    const auto& recs = res.trajectory.records;
    if (!recs.empty()) {
        double per_step = 0.0, side = 0.0;
        for (size_t i = 1; i < recs.size(); ++i) {
            const double tot = recs[i].m1 - recs[i].m2;
            const double prev = recs[i - 1].m1 - recs[i - 1].m2;
            const double steps = std::max(1.0, std::round((recs[i].t - recs[i - 1].t) / dt));
            per_step = std::max(per_step, std::abs(tot - prev) / steps);
            side = std::max({side, std::abs(recs[i].m1 - recs.front().m1) / recs.front().m1,
                             std::abs(recs[i].m2 - recs.front().m2) / recs.front().m2});
        }
        res.total_mass_drift_per_step = per_step;
        res.side_mass_drift_rel = side;
    }

    if (res.trajectory.final_state) {
        const SimState& fs = *res.trajectory.final_state;
        res.attained_p = fs.p;
        res.attained_lambda = fs.lam;
        double e = 0.0;
        for (int i = 0; i < fs.f.size(); ++i) {
            e = std::max(e, std::abs(fs.f.values[i] - f_inf.values[i]));
        }
        res.final_err_linf = e;
    }

    if (cfg.perturbation.kind == PerturbationKind::none || cfg.perturbation.amplitude == 0.0) {
        res.decay.defined = false;
        res.decay.norm_kind = cfg.fit.norm;
        res.decay.note = "zero-amplitude run; no decay to fit";
    } else {
        try {
            const auto window =
                cfg.fit.window
                    ? *cfg.fit.window
                    : default_fit_window(res.trajectory, cfg.fit.norm, res.spectral_gap_value,
                                         cfg.t_end, res.fixed_point_residual);
            res.decay = fit_decay(res.trajectory, cfg.fit.norm, window);
        } catch (const Error& e) {
            res.decay.defined = false;
            res.decay.norm_kind = cfg.fit.norm;
            res.decay.note = e.what();
        }
    }

    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

json summary_json(const ScenarioResult& res) {
    json j;
    j["config"] = res.cfg.to_json();
    j["config_hash"] = content_hash(j["config"].dump());
    j["baseline"] = {{"p0", res.baseline.p0}, {"lambda0", res.baseline.lambda0}};
    const MassPair pm = masses_of_equilibrium(res.predicted, res.cfg.params);
    j["predicted_limit"] = {{"p_inf", res.predicted.p0},
                            {"lambda_inf", res.predicted.lambda0},
                            {"m1", pm.m1},
                            {"m2", pm.m2}};
    j["initial_masses"] = {{"m1", res.initial_masses.m1}, {"m2", res.initial_masses.m2}};
    j["attained"] = {{"p", res.attained_p},
                     {"lambda", res.attained_lambda},
                     {"final_err_linf", res.final_err_linf}};
    j["mass_drift"] = {{"total_per_step", res.total_mass_drift_per_step},
                       {"side_relative", res.side_mass_drift_rel}};
    if (res.decay.defined) {
        j["decay_fit"] = {{"defined", true},
                          {"gamma_fit", res.decay.gamma_fit},
                          {"c_fit", res.decay.c_fit},
                          {"window", {res.decay.window.first, res.decay.window.second}},
                          {"residual", res.decay.residual},
                          {"norm", res.decay.norm_kind}};
    } else {
        j["decay_fit"] = {{"defined", false}, {"norm", res.decay.norm_kind}, {"note", res.decay.note}};
    }
    j["spectral_gap"] = res.spectral_gap_value;
    j["fixed_point_residual"] = res.fixed_point_residual;
    j["warnings"] = {{"smallness_guard", res.guard_warning},
                     {"masses_on_admissibility_boundary", res.boundary_mass_warning}};
    j["tolerances"] = {{"root_tol", 1e-12},
                       {"rank_tol_relative", 1e-9},
                       {"equality_rtol", 1e-12},
                       {"error_floor_factor", 10.0}};
    if (res.trajectory.failure) {
        j["failure"] = {{"t", res.trajectory.failure->t},
                        {"code", errc_name(res.trajectory.failure->code)},
                        {"message", res.trajectory.failure->message}};
    }
    if (res.cfg.params.D != 1.0) {
        j["time_scale"] = {{"D", res.cfg.params.D},
                           {"note", "reported times are in diffusion units; multiply by 1/D"}};
    }
    j["runtime_seconds"] = res.runtime_seconds;
    return j;
}

void write_scenario_outputs(const ScenarioResult& res) {
    namespace fs = std::filesystem;
    const fs::path dir(res.cfg.out_dir);
    fs::create_directories(dir);

    write_csv_file(res.trajectory, (dir / "trajectory.csv").string());
    write_csv_file(res.initial_state, (dir / "initial_state.csv").string());
    if (res.trajectory.final_state) {
        write_csv_file(res.trajectory.final_state->f, (dir / "final_state.csv").string());
    }
    {
        std::ofstream os(dir / "summary.json");
        os << summary_json(res).dump(2) << '\n';
    }
    if (res.cfg.plots) {
        const Grid& g = res.initial_state.grid();
        std::vector<double> xs(g.size());
        for (int i = 0; i < g.size(); ++i) xs[i] = g.node(i);
        std::vector<Series> snap;
        snap.push_back({"initial", xs, res.initial_state.values});
        if (res.trajectory.final_state) {
            snap.push_back({"final", xs, res.trajectory.final_state->f.values});
        }
        snap.push_back({"predicted limit", xs, res.predicted_state.values});
        write_line_chart((dir / "snapshots.svg").string(), snap,
                         {"density snapshots", "x", "f", false});

        std::vector<double> ts;
        std::vector<double> e2, ei, eh;
        for (const auto& r : res.trajectory.records) {
            ts.push_back(r.t);
            e2.push_back(r.err.l2);
            ei.push_back(r.err.linf);
            eh.push_back(r.err.h1);
        }
        write_line_chart((dir / "decay.svg").string(),
                         {{"l2", ts, e2}, {"linf", ts, ei}, {"h1", ts, eh}},
                         {"distance to the predicted limit", "t", "error", true});
    }
}

ConvergenceReport convergence_study(const ScenarioConfig& cfg, int levels) {
    if (levels < 3) fail(errc::config_error, "convergence study needs levels >= 3");
    ConvergenceReport rep;
    for (int k = 0; k < levels; ++k) {
        ScenarioConfig c = cfg;
        c.n = (cfg.n - 1) * (1 << k) + 1;
        c.dt.reset();
        c.plots = false;
        c.stride = 1;
        const ScenarioResult r = run_scenario(c);
        ConvergenceLevel lvl;
        lvl.n = c.n;
        lvl.h = Grid(c.params, c.n).spacing();
        lvl.side_mass_drift_rel = r.side_mass_drift_rel;
        lvl.fixed_point_residual = r.fixed_point_residual;
        const Grid g(c.params, c.n);
        const Eigen::MatrixXd M = assemble_discrete_operator(g, c.params);
        const auto ev = discrete_spectrum(M, 3);
        const double target = spectral_gap(c.params);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& mu : ev) {
            if (std::abs(mu) < 0.5 * target) continue;  // skip the near-kernel
            best = std::min(best, std::abs(std::abs(mu) - target) / target);
        }
        lvl.eigenvalue_rel_error = best;
        rep.levels.push_back(lvl);
    }
    const auto order = [](double coarse, double fine) {
        if (!(coarse > 0.0) || !(fine > 0.0)) return 0.0;
        return std::log2(coarse / fine);
    };
    for (size_t i = 1; i < rep.levels.size(); ++i) {
        rep.drift_orders.push_back(
            order(rep.levels[i - 1].side_mass_drift_rel, rep.levels[i].side_mass_drift_rel));
        rep.residual_orders.push_back(
            order(rep.levels[i - 1].fixed_point_residual, rep.levels[i].fixed_point_residual));
        rep.eigenvalue_orders.push_back(
            order(rep.levels[i - 1].eigenvalue_rel_error, rep.levels[i].eigenvalue_rel_error));
    }
    return rep;
}

json ConvergenceReport::to_json() const {
    json j;
    j["levels"] = json::array();
    for (const auto& l : levels) {
        j["levels"].push_back({{"n", l.n},
                               {"h", l.h},
                               {"side_mass_drift_rel", l.side_mass_drift_rel},
                               {"fixed_point_residual", l.fixed_point_residual},
                               {"eigenvalue_rel_error", l.eigenvalue_rel_error}});
    }
    j["drift_orders"] = drift_orders;
    j["residual_orders"] = residual_orders;
    j["eigenvalue_orders"] = eigenvalue_orders;
    return j;
}

SweepReport sweep_equilibria(double chi, int count, std::uint64_t seed,
                             const ScenarioConfig& base) {
    if (!(chi > 0.0)) fail(errc::config_error, "sweep needs chi > 0");
    if (count < 0) fail(errc::config_error, "sweep needs count >= 0");
    validate_params(base.params);
    SweepReport rep;
    rep.all_converged = true;
    std::mt19937_64 rng(seed);
    const ModelParams& prm = base.params;
    for (int i = 0; i < count; ++i) {
        Equilibrium eq;
        eq.p0 = -prm.A + prm.a + uniform01(rng) * (prm.A + prm.B - 2.0 * prm.a);
        eq.lambda0 = chi * (1.0 + uniform01(rng));

        SweepCase sc;
        sc.eq = eq;
        sc.gap = gap_for_lengths(prm.A + eq.p0, prm.B - eq.p0, prm.a);

        ScenarioConfig c = base;
        c.masses.reset();
        c.equilibrium = eq;
        // fixed relative amplitude: a fraction of the equilibrium's sup norm
        c.perturbation = base.perturbation;
        if (c.perturbation.kind == PerturbationKind::none) {
            c.perturbation.kind = PerturbationKind::first_eigenfunction;
        }
        const double rel = (base.perturbation.amplitude > 0.0) ? base.perturbation.amplitude : 0.05;
        c.perturbation.amplitude = rel * eq.lambda0 * prm.a;
        c.t_end = std::max(base.t_end, 3.0 / sc.gap);
        c.stride = 1;
        c.plots = false;
        c.seed = seed + 1000 + static_cast<std::uint64_t>(i);
        c.fit.window = {0.2 / sc.gap, std::min(c.t_end, 3.0 / sc.gap)};

        try {
            const ScenarioResult r = run_scenario(c);
            const double h = Grid(c.params, c.n).spacing();
            sc.fit = r.decay;
            sc.side_mass_drift_rel = r.side_mass_drift_rel;
            sc.total_mass_drift_per_step = r.total_mass_drift_per_step;
            sc.final_err_linf = r.final_err_linf;
            sc.total_mass_ok = r.total_mass_drift_per_step <= 1e-12;
            sc.side_mass_ok = r.side_mass_drift_rel <= 1e-3;
            sc.limit_ok = !r.trajectory.failure && r.final_err_linf <= 2.0 * h;
            sc.rate_ok = r.decay.defined &&
                         std::abs(r.decay.gamma_fit - sc.gap) <= 0.15 * sc.gap;
            sc.converged = sc.limit_ok;
            if (r.trajectory.failure) sc.note = r.trajectory.failure->message;
            if (r.decay.defined) {
                rep.worst_rate_rel_dev = std::max(
                    rep.worst_rate_rel_dev, std::abs(r.decay.gamma_fit - sc.gap) / sc.gap);
            }
            rep.worst_side_drift = std::max(rep.worst_side_drift, r.side_mass_drift_rel);
        } catch (const Error& e) {
            sc.note = e.what();
        }
        rep.all_converged = rep.all_converged && sc.converged;
        rep.cases.push_back(std::move(sc));
    }
    return rep;
}

json SweepReport::to_json() const {
    json j;
    j["cases"] = json::array();
    for (const auto& c : cases) {
        json jc;
        jc["equilibrium"] = {{"p0", c.eq.p0}, {"lambda0", c.eq.lambda0}};
        jc["gap"] = c.gap;
        jc["converged"] = c.converged;
        jc["checks"] = {{"total_mass", c.total_mass_ok},
                        {"side_mass", c.side_mass_ok},
                        {"rate", c.rate_ok},
                        {"limit", c.limit_ok}};
        jc["side_mass_drift_rel"] = c.side_mass_drift_rel;
        jc["total_mass_drift_per_step"] = c.total_mass_drift_per_step;
        jc["final_err_linf"] = c.final_err_linf;
        if (c.fit.defined) jc["gamma_fit"] = c.fit.gamma_fit;
        if (!c.note.empty()) jc["note"] = c.note;
        j["cases"].push_back(jc);
    }
    j["worst_rate_rel_dev"] = worst_rate_rel_dev;
    j["worst_side_drift"] = worst_side_drift;
    j["all_converged"] = all_converged;
    return j;
}

}  // namespace pricefb
