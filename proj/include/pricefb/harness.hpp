#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pricefb/manifold.hpp"
#include "pricefb/solver.hpp"
#include "pricefb/spectral.hpp"

namespace pricefb {

enum class PerturbationKind { none, first_eigenfunction, smooth_cosine, random_smooth, kernel_shift };

const char* perturbation_kind_name(PerturbationKind k) noexcept;
PerturbationKind parse_perturbation_kind(const std::string& name);

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::none;
    double amplitude = 0.0;  ///< sup-norm of the sampled perturbation
    double c = 1.0;          ///< kernel-shift g0 coefficient
    double d = 0.0;          ///< kernel-shift h0 coefficient
};

struct FitSpec {
    std::string norm = "linf";  ///< l2 | linf | h1
    std::optional<std::pair<double, double>> window;
};

struct ScenarioConfig {
    ModelParams params;
    std::optional<MassPair> masses;
    std::optional<Equilibrium> equilibrium;
    PerturbationSpec perturbation;
    int n = 801;
    std::optional<double> dt;  ///< defaults to h
    double t_end = 1.0;
    int stride = 1;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    StepOptions scheme;
    FitSpec fit;
    bool plots = true;

    /// Resolves masses/equilibrium into the baseline stationary state.
    Equilibrium baseline() const;
    double resolved_dt(const Grid& g) const;

    static ScenarioConfig from_json(const nlohmann::json& j);
    static ScenarioConfig from_json_file(const std::string& path);
    nlohmann::json to_json() const;
};

struct DecayFit {
    bool defined = false;
    double gamma_fit = 0.0;
    double c_fit = 0.0;
    std::pair<double, double> window{0.0, 0.0};
    double residual = 0.0;  ///< fit RMS in log space
    std::string norm_kind = "linf";
    std::string note;  ///< set when the fit is undefined
};

/// Least-squares line through (t, log err) on the window; gamma = -slope.
/// Throws NonpositiveError when a windowed error is nonpositive.
DecayFit fit_decay(const Trajectory& traj, const std::string& norm_kind,
                   std::pair<double, double> window);

/// [0.2/gap, min(t_end, 3/gap)] clipped above the error floor
/// 10 * fixed_point_residual.
std::pair<double, double> default_fit_window(const Trajectory& traj, const std::string& norm_kind,
                                             double gap, double t_end, double error_floor);

/// Samples one perturbation from the named library, normalized to the
/// requested sup-norm amplitude. For first-eigenfunction on a symmetric
/// effective interval, the odd-parity member of the leading eigenspace is
/// selected.
GridFunction build_perturbation(const PerturbationSpec& spec, const Equilibrium& eq,
                                const Grid& g, std::uint64_t seed);

struct ScenarioResult {
    ScenarioConfig cfg;
    Equilibrium baseline;
    Equilibrium predicted;
    MassPair initial_masses;
    Trajectory trajectory;
    DecayFit decay;
    double total_mass_drift_per_step = 0.0;
    double side_mass_drift_rel = 0.0;
    double final_err_linf = 0.0;  ///< sup distance of f(T) from the predicted limit
    double attained_p = 0.0;
    double attained_lambda = 0.0;
    bool guard_warning = false;
    bool boundary_mass_warning = false;
    double fixed_point_residual = 0.0;
    double spectral_gap_value = 0.0;
    double runtime_seconds = 0.0;
    GridFunction initial_state;
    GridFunction predicted_state;
};

/// Runs one configured scenario; file emission is separate.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// Writes trajectory.csv, initial_state.csv, final_state.csv,
/// summary.json and (optionally) snapshot/decay SVG plots into
/// cfg.out_dir.
void write_scenario_outputs(const ScenarioResult& result);

nlohmann::json summary_json(const ScenarioResult& result);

struct ConvergenceLevel {
    int n = 0;
    double h = 0.0;
    double side_mass_drift_rel = 0.0;
    double fixed_point_residual = 0.0;
    double eigenvalue_rel_error = 0.0;  ///< first nonzero discrete vs analytic
};

struct ConvergenceReport {
    std::vector<ConvergenceLevel> levels;
    std::vector<double> drift_orders;
    std::vector<double> residual_orders;
    std::vector<double> eigenvalue_orders;
    nlohmann::json to_json() const;
};

/// Reruns the scenario halving h and dt per level (levels >= 3).
ConvergenceReport convergence_study(const ScenarioConfig& cfg, int levels);

struct SweepCase {
    Equilibrium eq;
    bool converged = false;
    bool total_mass_ok = false;
    bool side_mass_ok = false;
    bool rate_ok = false;
    bool limit_ok = false;
    double gap = 0.0;  ///< spectral gap of the linearization at this equilibrium
    DecayFit fit;
    double side_mass_drift_rel = 0.0;
    double total_mass_drift_per_step = 0.0;
    double final_err_linf = 0.0;
    std::string note;
};

struct SweepReport {
    std::vector<SweepCase> cases;
    double worst_rate_rel_dev = 0.0;
    double worst_side_drift = 0.0;
    bool all_converged = false;
    nlohmann::json to_json() const;
};

/// Samples `count` admissible equilibria with lambda0 >= chi and runs a
/// fixed-relative-amplitude perturbation scenario at each.
SweepReport sweep_equilibria(double chi, int count, std::uint64_t seed,
                             const ScenarioConfig& base);

/// Hash of the canonical config dump, stored in every summary so outputs
/// are traceable to their inputs.
std::string content_hash(const std::string& text);

}  // namespace pricefb
