#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pricefb/harness.hpp"

using namespace pricefb;
using nlohmann::json;

namespace {

const ModelParams kSym{1.0, 1.0, 0.4, 1.0};

Trajectory synthetic(double rate, double prefactor, double noise, double t_end, double dt) {
    Trajectory traj;
    for (double t = 0.0; t <= t_end + 1e-12; t += dt) {
        TrajectoryRecord r{};
        r.t = t;
        const double e = prefactor * std::exp(-rate * t) + noise;
        r.err = {e, e, e};
        traj.records.push_back(r);
    }
    return traj;
}

ScenarioConfig small_config() {
    ScenarioConfig cfg;
    cfg.params = kSym;
    cfg.masses = MassPair{0.3, 0.3};
    cfg.perturbation = {PerturbationKind::first_eigenfunction, 0.02, 1.0, 0.0};
    cfg.n = 201;
    cfg.t_end = 0.25;
    cfg.stride = 2;
    cfg.seed = 9;
    cfg.plots = false;
    return cfg;
}

}  // namespace

TEST_CASE("fit_decay recovers exact exponential rates") {
    const Trajectory t1 = synthetic(3.0, 1.0, 0.0, 2.0, 0.01);
    const DecayFit f1 = fit_decay(t1, "linf", {0.0, 2.0});
    CHECK(f1.gamma_fit == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(f1.c_fit == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(f1.residual <= 1e-10);

    const Trajectory t2 = synthetic(3.0, 2.0, 1e-12, 2.0, 0.01);
    const DecayFit f2 = fit_decay(t2, "l2", {0.0, 2.0});
    CHECK(f2.gamma_fit == doctest::Approx(3.0).epsilon(1e-6));

    Trajectory t3 = synthetic(3.0, 1.0, 0.0, 2.0, 0.01);
    t3.records[150].err = {0.0, 0.0, 0.0};  // error floor reached inside the window
    CHECK_THROWS_AS(fit_decay(t3, "linf", {0.0, 2.0}), Error);
}

TEST_CASE("default fit window clips at the error floor") {
    const Trajectory t = synthetic(10.0, 1.0, 0.0, 2.0, 0.01);
    const auto w = default_fit_window(t, "linf", 10.0, 2.0, 1e-7);
    CHECK(w.first == doctest::Approx(0.02));
    // err falls to 10*floor = 1e-6 at t = ln(1e6)/10 = 1.38, inside 3/gap = 0.3
    CHECK(w.second <= 0.3 + 1e-12);
    const auto w2 = default_fit_window(t, "linf", 10.0, 0.1, 0.0);
    CHECK(w2.second == doctest::Approx(0.1));
}

TEST_CASE("first-eigenfunction perturbation is the odd member on symmetric intervals") {
    const Grid g = make_grid(kSym, 401);
    const GridFunction p =
        build_perturbation({PerturbationKind::first_eigenfunction, 0.02, 1.0, 0.0},
                           {0.0, 0.9375}, g, 1);
    const int n = g.size();
    double linf = 0.0;
    double odd_defect = 0.0;
    for (int i = 0; i < n; ++i) {
        linf = std::max(linf, std::abs(p.values[i]));
        odd_defect = std::max(odd_defect, std::abs(p.values[i] + p.values[n - 1 - i]));
    }
    CHECK(linf == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(odd_defect <= 1e-10 * 0.02 + 1e-14);

    // side masses vanish for eigenfunction perturbations
    CHECK(std::abs(integrate(p, -1.0, 0.0)) <= 1e-8);
    CHECK(std::abs(integrate(p, 0.0, 1.0)) <= 1e-8);
}

TEST_CASE("perturbation library: determinism, kernel shift, random smooth") {
    const Grid g = make_grid(kSym, 201);
    const Equilibrium eq{0.1, 0.8};

    const auto r1 = build_perturbation({PerturbationKind::random_smooth, 0.01, 1, 0}, eq, g, 77);
    const auto r2 = build_perturbation({PerturbationKind::random_smooth, 0.01, 1, 0}, eq, g, 77);
    const auto r3 = build_perturbation({PerturbationKind::random_smooth, 0.01, 1, 0}, eq, g, 78);
    REQUIRE(r1.size() == r2.size());
    bool identical = true, differs = false;
    for (int i = 0; i < r1.size(); ++i) {
        identical = identical && (r1.values[i] == r2.values[i]);
        differs = differs || (r1.values[i] != r3.values[i]);
    }
    CHECK(identical);
    CHECK(differs);

    const auto ks = build_perturbation({PerturbationKind::kernel_shift, 0.05, 1.0, 0.0}, eq, g, 1);
    // shape proportional to g0(x - p0): flat at -a*scale left, +a*scale right
    CHECK(ks.values[0] == doctest::Approx(-0.05).epsilon(1e-12));
    CHECK(ks.values[g.size() - 1] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(interpolate(ks, eq.p0) == doctest::Approx(0.0).epsilon(1e-10));

    CHECK_THROWS_AS(
        build_perturbation({PerturbationKind::kernel_shift, 0.05, 0.0, 0.0}, eq, g, 1), Error);

    const auto none = build_perturbation({PerturbationKind::none, 0.0, 1, 0}, eq, g, 1);
    for (double v : none.values) CHECK(v == 0.0);
}

TEST_CASE("run_scenario: fixed point flags an undefined decay fit") {
    ScenarioConfig cfg = small_config();
    cfg.perturbation.kind = PerturbationKind::none;
    cfg.perturbation.amplitude = 0.0;
    const ScenarioResult res = run_scenario(cfg);
    CHECK_FALSE(res.decay.defined);
    CHECK(res.final_err_linf <= 1e-6);
    CHECK(res.total_mass_drift_per_step <= 1e-12);
    CHECK_FALSE(res.trajectory.failure.has_value());
}

TEST_CASE("run_scenario is deterministic and self-describing") {
    const ScenarioConfig cfg = small_config();
    const ScenarioResult a = run_scenario(cfg);
    const ScenarioResult b = run_scenario(cfg);
    REQUIRE(a.trajectory.records.size() == b.trajectory.records.size());
    for (size_t i = 0; i < a.trajectory.records.size(); ++i) {
        CHECK(a.trajectory.records[i].p == b.trajectory.records[i].p);
        CHECK(a.trajectory.records[i].err.linf == b.trajectory.records[i].err.linf);
    }
    const json s = summary_json(a);
    for (const char* key : {"config", "config_hash", "baseline", "predicted_limit", "attained",
                            "mass_drift", "decay_fit", "spectral_gap", "warnings", "tolerances"}) {
        CHECK(s.contains(key));
    }
    CHECK(s["config_hash"] == summary_json(b)["config_hash"]);
}

TEST_CASE("scenario outputs land on disk") {
    namespace fs = std::filesystem;
    ScenarioConfig cfg = small_config();
    cfg.plots = true;
    cfg.out_dir = (fs::temp_directory_path() / "pricefb_test_out").string();
    fs::remove_all(cfg.out_dir);
    const ScenarioResult res = run_scenario(cfg);
    write_scenario_outputs(res);
    for (const char* name : {"trajectory.csv", "initial_state.csv", "final_state.csv",
                             "summary.json", "snapshots.svg", "decay.svg"}) {
        CHECK(fs::exists(fs::path(cfg.out_dir) / name));
    }
    std::ifstream is(fs::path(cfg.out_dir) / "trajectory.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,p,lambda,m1,m2,err_l2,err_linf,err_h1");
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("config JSON round trip") {
    ScenarioConfig cfg = small_config();
    cfg.fit.window = {0.05, 0.2};
    cfg.dt = 0.004;
    cfg.scheme.crank_nicolson = true;
    cfg.scheme.midpoint_corrector = true;
    const ScenarioConfig back = ScenarioConfig::from_json(cfg.to_json());
    CHECK(back.scheme.crank_nicolson);
    CHECK(back.scheme.midpoint_corrector);
    CHECK(back.params.A == cfg.params.A);
    CHECK(back.masses->m1 == cfg.masses->m1);
    CHECK(back.perturbation.kind == cfg.perturbation.kind);
    CHECK(back.perturbation.amplitude == cfg.perturbation.amplitude);
    CHECK(back.n == cfg.n);
    CHECK(back.dt.value() == cfg.dt.value());
    CHECK(back.fit.window->second == cfg.fit.window->second);
    CHECK(back.seed == cfg.seed);

    CHECK_THROWS_AS(ScenarioConfig::from_json(json{{"m1", 0.3}}).baseline(), Error);
}

TEST_CASE("content hash matches the git blob convention") {
    CHECK(content_hash("hello") == "b6fc4c620b67d95f953a5c1c1230aaab5db5a1b0");
    CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("convergence study reports first-order side-mass drift") {
    ScenarioConfig cfg = small_config();
    cfg.n = 101;
    cfg.t_end = 0.25;
    const ConvergenceReport rep = convergence_study(cfg, 3);
    REQUIRE(rep.levels.size() == 3);
    CHECK(rep.levels[0].n == 101);
    CHECK(rep.levels[2].n == 401);
    for (double ord : rep.drift_orders) CHECK(ord >= 0.8);
    for (const auto& l : rep.levels) {
        // sampled equilibria are exact fixed points, so the residual floor
        CHECK(l.fixed_point_residual <= 1e-10);
        CHECK(l.eigenvalue_rel_error <= 0.05);
    }
    CHECK(rep.eigenvalue_orders.front() >= 0.9);

    CHECK_THROWS_AS(convergence_study(cfg, 2), Error);
}

TEST_CASE("midpoint corrector shrinks the splitting error in the side masses") {
    ScenarioConfig plain = small_config();
    plain.n = 401;
    plain.t_end = 0.5;
    ScenarioConfig corrected = plain;
    corrected.scheme.crank_nicolson = true;
    corrected.scheme.midpoint_corrector = true;
    const double d_plain = run_scenario(plain).side_mass_drift_rel;
    const double d_corr = run_scenario(corrected).side_mass_drift_rel;
    CHECK(d_corr < 0.2 * d_plain);  // first-order splitting is not the scheme's floor
}

TEST_CASE("errors decay monotonically after the initial transient") {
    ScenarioConfig cfg = small_config();
    cfg.n = 401;
    cfg.t_end = 0.3;
    cfg.stride = 4;
    const ScenarioResult res = run_scenario(cfg);
    REQUIRE_FALSE(res.trajectory.failure.has_value());
    double prev = -1.0;
    int violations = 0;
    for (const auto& r : res.trajectory.records) {
        if (r.t < 0.05) continue;  // skip the transient
        if (prev > 0.0 && r.err.linf > prev * (1.0 + 1e-9)) ++violations;
        prev = r.err.linf;
    }
    CHECK(violations == 0);
}

TEST_CASE("argmin over the equilibrium family agrees with the mass prediction") {
    ScenarioConfig cfg = small_config();
    cfg.n = 401;
    cfg.t_end = 1.0;
    const ScenarioResult res = run_scenario(cfg);
    REQUIRE(res.trajectory.final_state.has_value());
    const auto [fit, dist] =
        fit_nearest_equilibrium(res.trajectory.final_state->f,
                                {res.attained_p, res.attained_lambda});
    const double h = Grid(cfg.params, cfg.n).spacing();
    CHECK(std::abs(fit.p0 - res.predicted.p0) <= 2.0 * h);
    CHECK(std::abs(fit.lambda0 - res.predicted.lambda0) <= 2.0 * h);
    CHECK(dist <= 2.0 * h);
}

TEST_CASE("same config and seed give bit-identical CSV outputs") {
    namespace fs = std::filesystem;
    ScenarioConfig cfg = small_config();
    cfg.perturbation.kind = PerturbationKind::random_smooth;
    cfg.plots = false;
    auto emit = [&](const std::string& dir) {
        cfg.out_dir = dir;
        fs::remove_all(dir);
        write_scenario_outputs(run_scenario(cfg));
        std::ifstream is(fs::path(dir) / "trajectory.csv");
        return std::string(std::istreambuf_iterator<char>(is), {});
    };
    const std::string d1 = (fs::temp_directory_path() / "pricefb_det_a").string();
    const std::string d2 = (fs::temp_directory_path() / "pricefb_det_b").string();
    CHECK(emit(d1) == emit(d2));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("sweep: sampler respects bounds, empty count, determinism") {
    ScenarioConfig base = small_config();
    base.n = 201;
    base.t_end = 0.3;
    base.perturbation.amplitude = 0.05;  // relative factor inside the sweep

    const SweepReport empty = sweep_equilibria(0.5, 0, 3, base);
    CHECK(empty.cases.empty());
    CHECK(empty.all_converged);

    const SweepReport r1 = sweep_equilibria(0.5, 3, 3, base);
    const SweepReport r2 = sweep_equilibria(0.5, 3, 3, base);
    REQUIRE(r1.cases.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        const auto& c = r1.cases[i];
        CHECK(c.eq.lambda0 >= 0.5);
        CHECK(c.eq.lambda0 <= 1.0);
        CHECK(c.eq.p0 > -1.0 + 0.4);
        CHECK(c.eq.p0 < 1.0 - 0.4);
        CHECK(c.eq.p0 == r2.cases[i].eq.p0);
        CHECK(c.eq.lambda0 == r2.cases[i].eq.lambda0);
    }
    CHECK_THROWS_AS(sweep_equilibria(-1.0, 2, 3, base), Error);
}
