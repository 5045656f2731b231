#include "pricefb/solver.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

namespace pricefb {

namespace {

constexpr double kRootTol = 1e-12;

/// Thomas solve of a tridiagonal system; diag/upper/lower are overwritten.
void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag,
                       std::vector<double>& upper, std::vector<double>& rhs,
                       std::vector<double>& out) {
    const int n = static_cast<int>(diag.size());
    for (int i = 1; i < n; ++i) {
        const double m = lower[i - 1] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for (int i = n - 2; i >= 0; --i) {
        out[i] = (rhs[i] - upper[i] * out[i + 1]) / diag[i];
    }
}

/// One diffusion step (I - theta dt D2) f_new = (I + (1-theta) dt D2) f_old
/// + source; theta = 1 is backward Euler, theta = 1/2 Crank-Nicolson. The
/// Neumann closure is the ghost-node reflection, whose rows carry zero
/// trapezoid-weighted sum, so the trapezoid mass of f_new equals that of
/// f_old plus the source mass exactly.
std::vector<double> diffuse(const Grid& g, const std::vector<double>& fin,
                            const std::vector<double>& source, double dt, double theta) {
    const int n = g.size();
    const double mu = dt / (g.spacing() * g.spacing());
    std::vector<double> lower(n - 1, -theta * mu), diag(n, 1.0 + 2.0 * theta * mu),
        upper(n - 1, -theta * mu), rhs(n), out(n);
    upper[0] = -2.0 * theta * mu;
    lower[n - 2] = -2.0 * theta * mu;
    if (theta == 1.0) {
        rhs = fin;
    } else {
        const double emu = (1.0 - theta) * mu;
        rhs[0] = fin[0] + emu * (2.0 * fin[1] - 2.0 * fin[0]);
        for (int i = 1; i < n - 1; ++i) {
            rhs[i] = fin[i] + emu * (fin[i + 1] - 2.0 * fin[i] + fin[i - 1]);
        }
        rhs[n - 1] = fin[n - 1] + emu * (2.0 * fin[n - 2] - 2.0 * fin[n - 1]);
    }
    for (int i = 0; i < n; ++i) rhs[i] += source[i];
    solve_tridiagonal(lower, diag, upper, rhs, out);
    return out;
}

double flux_at(const GridFunction& f, double p) {
    const double lam = -derivative_at(f, p, 1);
    if (!(lam > 0.0)) {
        fail(errc::nonpositive_slope, "-f_x(p) = " + format_full(lam) + " at p = " + format_full(p));
    }
    return lam;
}

}  // namespace

double find_root(const GridFunction& f, double window_center, double window_radius) {
    const Grid& g = f.grid();
    double lo = std::max(window_center - window_radius, g.left());
    double hi = std::min(window_center + window_radius, g.right());
    double flo = interpolate(f, lo);
    double fhi = interpolate(f, hi);
    if (!(flo > 0.0 && fhi < 0.0)) {
        fail(errc::no_sign_change, "window [" + format_full(lo) + ", " + format_full(hi) +
                                       "] does not bracket: f(lo) = " + format_full(flo) +
                                       ", f(hi) = " + format_full(fhi));
    }
    while (hi - lo > kRootTol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = interpolate(f, mid);
        if (fm == 0.0) return mid;
        if (fm > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    // closed-form solve in the cell the bisection landed in
    const auto [i, theta] = g.locate(0.5 * (lo + hi));
    const double va = f.values[i], vb = f.values[i + 1];
    if (va != vb) {
        const double root = g.node(i) + g.spacing() * va / (va - vb);
        if (root >= lo - g.spacing() && root <= hi + g.spacing()) return root;
    }
    return 0.5 * (lo + hi);
}

MassPair side_masses(const GridFunction& f, double p) {
    MassPair m;
    m.m1 = integrate(f, f.grid().left(), p);
    m.m2 = -integrate(f, p, f.grid().right());
    return m;
}

SimState init_state(const GridFunction& f_I, double p_guess) {
    const ModelParams& prm = f_I.grid().params();
    if (!(p_guess > -prm.A + prm.a && p_guess < prm.B - prm.a)) {
        fail(errc::out_of_domain, "p_guess outside (-A+a, B-a)");
    }
    const double p = find_root(f_I, p_guess, 0.5 * prm.a);
    if (!(p > -prm.A + prm.a && p < prm.B - prm.a)) {
        fail(errc::boundary_collision, "initial root outside (-A+a, B-a): p = " + format_full(p));
    }
    const double lam = flux_at(f_I, p);
    SimState s(f_I, 0.0, p, lam);

    // smallness guard relative to the state's own mass-matched equilibrium
    const MassPair m = side_masses(f_I, p);
    if (admissible(m, prm)) {
        const Equilibrium eq = equilibrium_from_masses(m, prm);
        const GridFunction feq = sample(f_I.grid(), eq);
        double dist = 0.0;
        for (int i = 0; i < f_I.size(); ++i) {
            dist = std::max(dist, std::abs(f_I.values[i] - feq.values[i]));
        }
        const double nu = prm.a / 8.0;
        s.smallness_warning = dist >= std::min(eq.lambda0 * nu, eq.lambda0);
    } else {
        s.smallness_warning = true;
    }
    return s;
}

SimState step(const SimState& s, double dt, const StepOptions& opts) {
    if (!(dt > 0.0)) fail(errc::invalid_params, "dt must be positive");
    const Grid& g = s.f.grid();
    const ModelParams& prm = g.params();
    const double theta = opts.crank_nicolson ? 0.5 : 1.0;
    const double h = g.spacing();
    if (s.p - prm.a <= g.left() + h || s.p + prm.a >= g.right() - h) {
        fail(errc::boundary_collision,
             "source site within one cell of the wall: p = " + format_full(s.p));
    }

    auto advance = [&](double lam_source) {
        const GridFunction dm = deposit_delta(g, s.p - prm.a, lam_source * dt);
        const GridFunction dp = deposit_delta(g, s.p + prm.a, lam_source * dt);
        std::vector<double> source(g.size());
        for (int i = 0; i < g.size(); ++i) source[i] = dm.values[i] - dp.values[i];
        return GridFunction(g, diffuse(g, s.f.values, source, dt, theta));
    };

    GridFunction fnew = advance(s.lam);
    double window = 4.0 * std::max(g.spacing(), s.lam * dt);
    double pnew = find_root(fnew, s.p, window);
    double lamnew = flux_at(fnew, pnew);

    if (opts.midpoint_corrector) {
        fnew = advance(0.5 * (s.lam + lamnew));
        pnew = find_root(fnew, s.p, window);
        lamnew = flux_at(fnew, pnew);
    }

    if (!(pnew > -prm.A + prm.a && pnew < prm.B - prm.a)) {
        fail(errc::boundary_collision, "free boundary left (-A+a, B-a): p = " + format_full(pnew));
    }
    SimState out(std::move(fnew), s.t + dt, pnew, lamnew);
    out.smallness_warning = s.smallness_warning;
    return out;
}

double boundary_velocity(const SimState& s) {
    if (!(s.lam > 0.0)) fail(errc::nonpositive_slope, "state has lam <= 0");
    const double fx = derivative_at(s.f, s.p, 1);
    if (!(-fx > 0.0)) fail(errc::nonpositive_slope, "-f_x(p) <= 0");
    const double fxx = derivative_at(s.f, s.p, 2);
    return -fxx / fx;
}

Trajectory run(const SimState& s0, double dt, double t_end, const GridFunction& f_inf,
               int stride, const StepOptions& opts) {
    if (!(dt > 0.0) || !(t_end > 0.0)) fail(errc::invalid_params, "run needs dt > 0, t_end > 0");
    if (dt > s0.f.grid().spacing() * (1.0 + 1e-12)) {
        fail(errc::invalid_params, "run requires dt <= h");
    }
    if (stride < 1) fail(errc::invalid_params, "stride must be >= 1");

    Trajectory traj;
    auto record = [&](const SimState& s) {
        GridFunction diff = s.f;
        for (int i = 0; i < diff.size(); ++i) diff.values[i] -= f_inf.values[i];
        const MassPair m = side_masses(s.f, s.p);
        traj.records.push_back({s.t, s.p, s.lam, m.m1, m.m2, discrete_norms(diff)});
    };

    SimState s = s0;
    record(s);
    const long nsteps = std::lround(t_end / dt);
    for (long k = 1; k <= nsteps; ++k) {
        try {
            s = step(s, dt, opts);
        } catch (const Error& e) {
            traj.failure = StepFailure{s.t, e.code(), e.what()};
            traj.final_state = std::move(s);
            return traj;
        }
        if (k % stride == 0 || k == nsteps) record(s);
    }
    traj.final_state = std::move(s);
    return traj;
}

void write_csv(const Trajectory& traj, std::ostream& os) {
    os << "t,p,lambda,m1,m2,err_l2,err_linf,err_h1\n";
    for (const auto& r : traj.records) {
        os << format_full(r.t) << ',' << format_full(r.p) << ',' << format_full(r.lam) << ','
           << format_full(r.m1) << ',' << format_full(r.m2) << ',' << format_full(r.err.l2) << ','
           << format_full(r.err.linf) << ',' << format_full(r.err.h1) << '\n';
    }
}

void write_csv_file(const Trajectory& traj, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(errc::config_error, "cannot open for writing: " + path);
    write_csv(traj, os);
}

}  // namespace pricefb
