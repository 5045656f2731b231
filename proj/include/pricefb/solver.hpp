#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pricefb/grid.hpp"

namespace pricefb {

/// State of one simulation: density values, time, tracked root and flux.
struct SimState {
    SimState(GridFunction f_, double t_, double p_, double lam_)
        : f(std::move(f_)), t(t_), p(p_), lam(lam_) {}

    GridFunction f;
    double t;
    double p;    ///< free-boundary position, the root of f
    double lam;  ///< flux lambda = -f_x(p)
    bool smallness_warning = false;
};

struct StepOptions {
    bool crank_nicolson = false;    ///< trapezoidal diffusion instead of backward Euler
    bool midpoint_corrector = false;  ///< one re-deposit pass with the midpoint flux
};

struct TrajectoryRecord {
    double t, p, lam, m1, m2;
    Norms err;  ///< norms of f - f_inf
};

struct StepFailure {
    double t;
    errc code;
    std::string message;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    std::optional<StepFailure> failure;
    std::optional<SimState> final_state;  ///< last state reached (also on failure)
};

/// Unique zero of the piecewise-linear interpolant inside
/// (center - radius, center + radius). Bisection to 1e-12 localizes the
/// root, then the containing cell is solved in closed form.
/// Throws NoSignChange when the window does not bracket.
double find_root(const GridFunction& f, double window_center, double window_radius);

/// Builds a SimState at t = 0 from initial data: locates the root near
/// p_guess, evaluates the flux, and sets the smallness warning when the
/// data sits outside the guard neighborhood min(lambda0*nu, lambda0),
/// nu = a/8, of its own mass-matched equilibrium.
SimState init_state(const GridFunction& f_I, double p_guess);

/// One semi-implicit step: the pair of delta sources is deposited
/// explicitly from the current (p, lam), diffusion advances implicitly
/// with mass-conserving Neumann closures, then p and lam are refreshed.
SimState step(const SimState& s, double dt, const StepOptions& opts = {});

/// p'(t) = -f_xx(p)/f_x(p); throws NonpositiveSlope when -f_x(p) <= 0.
double boundary_velocity(const SimState& s);

/// Repeated step with records every stride steps (plus the initial and
/// final states). A failing step stops the run and is recorded on the
/// trajectory rather than thrown.
Trajectory run(const SimState& s0, double dt, double t_end, const GridFunction& f_inf,
               int stride, const StepOptions& opts = {});

/// CSV columns: t,p,lambda,m1,m2,err_l2,err_linf,err_h1.
void write_csv(const Trajectory& traj, std::ostream& os);
void write_csv_file(const Trajectory& traj, const std::string& path);

/// Side masses split at the tracked root: m1 left of p, m2 = -integral
/// right of p.
MassPair side_masses(const GridFunction& f, double p);

}  // namespace pricefb
