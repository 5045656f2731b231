#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pricefb/harness.hpp"
#include "pricefb/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pricefb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case errc::config_error:
        case errc::invalid_params:
        case errc::not_admissible:
            return kExitConfig;
        default:
            return kExitSolver;
    }
}

void write_json(const json& j, const std::string& out_dir, const std::string& name) {
    if (out_dir.empty()) return;
    fs::create_directories(out_dir);
    std::ofstream os(fs::path(out_dir) / name);
    os << j.dump(2) << '\n';
}

int cmd_equilibrium(const ScenarioConfig& cfg, const std::string& out_dir) {
    if (!cfg.masses) fail(errc::config_error, "equilibrium subcommand needs m1 and m2");
    json j;
    j["admissible"] = admissible(*cfg.masses, cfg.params);
    const auto bounds = admissible_ratio_bounds(cfg.params);
    j["ratio_bounds"] = {bounds.lo, bounds.hi};
    if (j["admissible"].get<bool>()) {
        const Equilibrium eq = equilibrium_from_masses(*cfg.masses, cfg.params);
        const MassPair back = masses_of_equilibrium(eq, cfg.params);
        j["p_inf"] = eq.p0;
        j["lambda_inf"] = eq.lambda0;
        j["m1"] = back.m1;
        j["m2"] = back.m2;
        j["on_admissibility_boundary"] = at_admissibility_boundary(*cfg.masses, cfg.params);
    }
    j["spectral_gap"] = spectral_gap(cfg.params);
    std::cout << j.dump(2) << '\n';
    write_json(j, out_dir, "equilibrium.json");
    return kExitOk;
}

int cmd_spectrum(const ScenarioConfig& cfg, const std::string& out_dir, double alpha_max,
                 bool plot) {
    const auto cands = eigenvalue_candidates(cfg.params, alpha_max);
    fs::create_directories(out_dir.empty() ? "." : out_dir);
    const fs::path csv_path = fs::path(out_dir.empty() ? "." : out_dir) / "spectrum.csv";
    std::ofstream os(csv_path);
    os << "alpha,mu,dim,family,case\n";
    std::vector<Series> plot_series;
    for (const auto& c : cands) {
        const auto pair = matching_rank(c.alpha, cfg.params);
        std::string fams;
        for (const auto& t : c.tags) {
            if (!fams.empty()) fams += '|';
            fams += family_name(t.family);
        }
        const int dim = pair ? pair->dim : 0;
        std::string case_str;
        if (pair && pair->symmetric_case_id) case_str = std::to_string(*pair->symmetric_case_id);
        os << format_full(c.alpha) << ',' << format_full(-c.alpha * c.alpha) << ',' << dim << ','
           << fams << ',' << case_str << '\n';
        if (plot && pair && plot_series.size() < 4) {
            const int samples = 601;
            Series s;
            s.label = "alpha=" + std::to_string(c.alpha).substr(0, 6);
            for (int i = 0; i < samples; ++i) {
                const double x =
                    -cfg.params.A + (cfg.params.A + cfg.params.B) * i / (samples - 1.0);
                s.x.push_back(x);
                s.y.push_back(pair->eval(0, x));
            }
            plot_series.push_back(std::move(s));
        }
    }
    std::cout << "wrote " << csv_path.string() << " (" << cands.size() << " candidates)\n";
    if (plot) {
        const fs::path svg = fs::path(out_dir.empty() ? "." : out_dir) / "eigenfunctions.svg";
        write_line_chart(svg.string(), plot_series, {"leading eigenfunctions", "x", "g", false});
        std::cout << "wrote " << svg.string() << '\n';
    }
    return kExitOk;
}

int cmd_simulate(const ScenarioConfig& cfg) {
    const ScenarioResult res = run_scenario(cfg);
    write_scenario_outputs(res);
    std::cout << summary_json(res).dump(2) << '\n';
    if (res.trajectory.failure) {
        std::cerr << "solver failed at t = " << res.trajectory.failure->t << ": "
                  << res.trajectory.failure->message << '\n';
        return kExitSolver;
    }
    return kExitOk;
}

int cmd_project(const ScenarioConfig& cfg, const std::string& in_csv,
                const std::string& out_dir) {
    const GridFunction f = read_gridfunction_csv_file(in_csv, cfg.params);
    const KernelCoords k = project_kernel(f, cfg.params);
    json j{{"c", k.c}, {"d", k.d}, {"I1", k.i1}, {"I2", k.i2}};
    std::cout << j.dump(2) << '\n';
    write_json(j, out_dir, "projection.json");
    return kExitOk;
}

int cmd_convergence(const ScenarioConfig& cfg, const std::string& out_dir, int levels) {
    const ConvergenceReport rep = convergence_study(cfg, levels);
    const json j = rep.to_json();
    std::cout << j.dump(2) << '\n';
    write_json(j, out_dir, "convergence.json");
    return kExitOk;
}

int cmd_sweep(const ScenarioConfig& cfg, const std::string& out_dir, double chi, int count,
              std::uint64_t seed) {
    const SweepReport rep = sweep_equilibria(chi, count, seed, cfg);
    const json j = rep.to_json();
    std::cout << j.dump(2) << '\n';
    write_json(j, out_dir, "sweep.json");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"price-formation free-boundary laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, in_csv;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double alpha_max = 20.0;
    bool plot = false;
    int levels = 3;
    double chi = 0.5;
    int count = 5;

    const auto add_common = [&](CLI::App* sub, bool config_required = true) {
        auto* opt = sub->add_option("--config", config_path, "JSON config path");
        if (config_required) opt->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override the config seed")->each([&](std::string) {
            seed_set = true;
        });
    };

    auto* eq = app.add_subcommand("equilibrium", "masses -> stationary state");
    add_common(eq);
    auto* sp = app.add_subcommand("spectrum", "eigenvalues of the linearized operator");
    add_common(sp);
    sp->add_option("--alpha-max", alpha_max, "largest frequency to enumerate");
    sp->add_flag("--plot", plot, "emit an SVG of the leading eigenfunctions");
    auto* sim = app.add_subcommand("simulate", "run one scenario");
    add_common(sim);
    auto* prj = app.add_subcommand("project", "kernel coordinates of a stored state");
    add_common(prj);
    prj->add_option("--in", in_csv, "GridFunction CSV")->required();
    auto* cnv = app.add_subcommand("convergence", "grid-refinement study");
    add_common(cnv);
    cnv->add_option("--levels", levels, "number of refinement levels (>= 3)");
    auto* swp = app.add_subcommand("sweep", "perturbation sweep over sampled equilibria");
    add_common(swp);
    swp->add_option("--chi", chi, "lower bound on lambda0");
    swp->add_option("--count", count, "number of sampled equilibria");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        ScenarioConfig cfg = ScenarioConfig::from_json_file(config_path);
        if (seed_set) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;

        if (app.got_subcommand(eq)) return cmd_equilibrium(cfg, out_dir);
        if (app.got_subcommand(sp)) return cmd_spectrum(cfg, out_dir, alpha_max, plot);
        if (app.got_subcommand(sim)) return cmd_simulate(cfg);
        if (app.got_subcommand(prj)) return cmd_project(cfg, in_csv, out_dir);
        if (app.got_subcommand(cnv)) return cmd_convergence(cfg, out_dir, levels);
        if (app.got_subcommand(swp)) return cmd_sweep(cfg, out_dir, chi, count,
                                                      seed_set ? seed : cfg.seed);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
    return kExitConfig;
}
