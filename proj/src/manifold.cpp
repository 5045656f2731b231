#include "pricefb/manifold.hpp"

#include <algorithm>
#include <cmath>

#include "pricefb/fitting.hpp"

namespace pricefb {

KernelCoords kernel_coords_from_integrals(double i1, double i2, const ModelParams& prm) {
    const double a = prm.a, A = prm.A, B = prm.B;
    const double den = a * (a - 2.0 * A) * (a - 2.0 * B);
    KernelCoords k;
    k.i1 = i1;
    k.i2 = i2;
    k.c = ((-a + 2.0 * A) * i2 - (-a + 2.0 * B) * i1) / den;
    k.d = ((-0.5 * a * a + a * B) * i1 - (0.5 * a * a - a * A) * i2) / den;
    return k;
}

KernelCoords project_kernel(const GridFunction& f, const ModelParams& prm) {
    validate_params(prm);
    return kernel_coords_from_integrals(integrate(f, -prm.A, 0.0), integrate(f, 0.0, prm.B), prm);
}

Equilibrium predict_limit(const GridFunction& f_I, double p_I, const ModelParams& prm) {
    MassPair m;
    m.m1 = integrate(f_I, -prm.A, p_I);
    m.m2 = -integrate(f_I, p_I, prm.B);
    return equilibrium_from_masses(m, prm);
}

std::pair<double, double> h_map(double lambda, double p, const ModelParams& prm) {
    const double a = prm.a;
    const double h1 = lambda * a * (p - 0.5 * a + prm.A) - 0.5 * lambda * p * p;
    const double h2 = 0.5 * lambda * p * p - lambda * a * (prm.B - p - 0.5 * a);
    return {h1, h2};
}

std::pair<double, double> invert_h(double h1, double h2, std::pair<double, double> seed,
                                   const ModelParams& prm) {
    double lambda = seed.first, p = seed.second;
    const auto resid = [&](double l, double q) {
        const auto [v1, v2] = h_map(l, q, prm);
        return std::pair{v1 - h1, v2 - h2};
    };
    const auto norm = [](std::pair<double, double> r) {
        return std::max(std::abs(r.first), std::abs(r.second));
    };
    auto r = resid(lambda, p);
    for (int iter = 0; iter < 100; ++iter) {
        if (norm(r) <= 1e-12) return {lambda, p};
        const double dl = 1e-7 * std::max(1.0, std::abs(lambda));
        const double dp = 1e-7 * std::max(1.0, std::abs(p));
        const auto rl_p = resid(lambda + dl, p), rl_m = resid(lambda - dl, p);
        const auto rp_p = resid(lambda, p + dp), rp_m = resid(lambda, p - dp);
        const double j11 = (rl_p.first - rl_m.first) / (2.0 * dl);
        const double j12 = (rp_p.first - rp_m.first) / (2.0 * dp);
        const double j21 = (rl_p.second - rl_m.second) / (2.0 * dl);
        const double j22 = (rp_p.second - rp_m.second) / (2.0 * dp);
        const double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-12) {
            fail(errc::singular_jacobian, "|det DH| = " + format_full(std::abs(det)));
        }
        const double sl = -(j22 * r.first - j12 * r.second) / det;
        const double sp = -(-j21 * r.first + j11 * r.second) / det;
        double damp = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 30; ++halving) {
            const double lt = lambda + damp * sl, pt = p + damp * sp;
            if (lt > 0.0) {
                const auto rt = resid(lt, pt);
                if (norm(rt) < norm(r)) {
                    lambda = lt;
                    p = pt;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            damp *= 0.5;
        }
        if (!accepted) {
            fail(errc::no_convergence, "Newton stalled at residual " + format_full(norm(r)));
        }
    }
    if (norm(resid(lambda, p)) <= 1e-12) return {lambda, p};
    fail(errc::no_convergence, "invert_h: 100 iterations exhausted");
}

NRemainder n_remainder(const GridFunction& g, const Equilibrium& e, const ModelParams& prm) {
    validate_equilibrium(e, prm);
    const Grid& grid = g.grid();
    GridFunction f = sample(grid, e);
    for (int i = 0; i < f.size(); ++i) f.values[i] += g.values[i];

    NRemainder out;
    out.p = find_root(f, e.p0, 0.5 * prm.a);
    const double slope = -derivative_at(f, out.p, 1);
    if (!(slope > 0.0)) fail(errc::nonpositive_slope, "-f_x(p) <= 0 in n_remainder");
    out.q = out.p - e.p0;
    out.r1 = interpolate(g, out.p) - interpolate(g, e.p0);
    out.r2 = derivative_at(g, out.p, 1) - derivative_at(g, e.p0, 1);
    const double gx0 = derivative_at(g, e.p0, 1);
    const double lam0 = e.lambda0;
    const double pm = out.p - prm.a, pp = out.p + prm.a;
    const double qm = e.p0 - prm.a, qp = e.p0 + prm.a;
    for (double loc : {pm, pp, qm, qp}) {
        if (!(loc > -prm.A && loc < prm.B)) {
            fail(errc::out_of_domain, "delta site left (-A, B): " + format_full(loc));
        }
    }
    auto& t = out.point_terms;
    // N1 = lam0 (R3- - R3+), the Taylor remainders of the shifted deltas
    t.push_back({pm, lam0, 0});
    t.push_back({qm, -lam0, 0});
    t.push_back({qm, lam0 * out.q, 1});
    t.push_back({pp, -lam0, 0});
    t.push_back({qp, lam0, 0});
    t.push_back({qp, -lam0 * out.q, 1});
    // N2 = R1 times the dipole pair at p0 -+ a
    t.push_back({qm, -out.r1, 1});
    t.push_back({qp, out.r1, 1});
    // N3 = -g_x(p0) [(d_{p-a} - d_{p0-a}) - (d_{p+a} - d_{p0+a})]
    t.push_back({pm, -gx0, 0});
    t.push_back({qm, gx0, 0});
    t.push_back({pp, gx0, 0});
    t.push_back({qp, -gx0, 0});
    // N4 = -R2 (d_{p-a} - d_{p+a})
    t.push_back({pm, -out.r2, 0});
    t.push_back({pp, out.r2, 0});
    return out;
}

double pair_measure(const NRemainder& m, const TestFunction& phi) {
    double acc = 0.0;
    for (const auto& t : m.point_terms) {
        if (t.order == 0) {
            acc += t.weight * phi.value(t.location);
        } else {
            acc -= t.weight * phi.deriv(t.location);
        }
    }
    return acc;
}

std::vector<TestFunction> test_battery(const ModelParams& prm) {
    const double L = prm.A + prm.B;
    const double A = prm.A;
    std::vector<TestFunction> out;
    out.push_back({"1", [](double) { return 1.0; }, [](double) { return 0.0; }});
    out.push_back({"x", [](double x) { return x; }, [](double) { return 1.0; }});
    out.push_back({"x^2", [](double x) { return x * x; }, [](double x) { return 2.0 * x; }});
    for (int k : {1, 2}) {
        const double w = k * M_PI / L;
        out.push_back({"cos(" + std::to_string(k) + "pi(x+A)/(A+B))",
                       [w, A](double x) { return std::cos(w * (x + A)); },
                       [w, A](double x) { return -w * std::sin(w * (x + A)); }});
    }
    return out;
}

double smallness_exponent(const Equilibrium& e, const GridFunction& g_dir,
                          std::span<const double> eps_list, const ModelParams& prm) {
    if (eps_list.size() < 2) fail(errc::invalid_params, "need at least two epsilons");
    for (size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) fail(errc::invalid_params, "epsilons must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
            fail(errc::invalid_params, "epsilons must decrease");
        }
    }
    const auto battery = test_battery(prm);
    std::vector<double> lx, ly;
    for (double eps : eps_list) {
        GridFunction g = g_dir;
        for (auto& v : g.values) v *= eps;
        const NRemainder nr = n_remainder(g, e, prm);
        double s = 0.0;
        for (const auto& phi : battery) s = std::max(s, std::abs(pair_measure(nr, phi)));
        if (!(s > 0.0)) {
            fail(errc::nonpositive_error,
                 "remainder pairing vanished at eps = " + format_full(eps));
        }
        lx.push_back(std::log(eps));
        ly.push_back(std::log(s));
    }
    return fit_line(lx, ly).slope;
}

std::pair<double, double> kernel_ode_rates(const ModelParams& prm) {
    const double a = prm.a, A = prm.A, B = prm.B;
    const double g1 = 2.0 * (-a + A + B) / (a * (a - 2.0 * A) * (a - 2.0 * B));
    const double g2 = (A - B) / ((a - 2.0 * A) * (a - 2.0 * B));
    return {g1, g2};
}

StationarityReport stationarity_check(const Equilibrium& e, const ModelParams& prm,
                                      const Grid& grid) {
    validate_equilibrium(e, prm);
    const GridFunction f0 = sample(grid, e);
    SimState s = init_state(f0, e.p0);
    const KernelCoords k0 = project_kernel(s.f, prm);
    const double dt = grid.spacing();
    StationarityReport rep;
    std::tie(rep.gamma1, rep.gamma2) = kernel_ode_rates(prm);
    const long nsteps = std::lround(1.0 / dt);
    for (long i = 0; i < nsteps; ++i) {
        s = step(s, dt);
        const KernelCoords k = project_kernel(s.f, prm);
        rep.max_dc = std::max(rep.max_dc, std::abs(k.c - k0.c));
        rep.max_dd = std::max(rep.max_dd, std::abs(k.d - k0.d));
    }
    return rep;
}

std::pair<Equilibrium, double> fit_nearest_equilibrium(const GridFunction& f,
                                                       const Equilibrium& seed) {
    const Grid& grid = f.grid();
    const ModelParams& prm = grid.params();
    const auto objective = [&](const Equilibrium& e) {
        double acc = 0.0;
        for (int i = 0; i < grid.size(); ++i) {
            const double d = f.values[i] - eval_equilibrium(e, prm, grid.node(i));
            const double w = (i == 0 || i + 1 == grid.size()) ? 0.5 : 1.0;
            acc += w * d * d;
        }
        return std::sqrt(acc * grid.spacing());
    };
    Equilibrium best = seed;
    double fbest = objective(best);
    double sp = prm.a / 8.0, sl = std::max(1e-3, best.lambda0 / 8.0);
    const double plo = -prm.A + prm.a, phi = prm.B - prm.a;
    while (sp > 1e-11 || sl > 1e-11) {
        bool improved = false;
        const Equilibrium trials[4] = {{best.p0 + sp, best.lambda0},
                                       {best.p0 - sp, best.lambda0},
                                       {best.p0, best.lambda0 + sl},
                                       {best.p0, best.lambda0 - sl}};
        for (const auto& t : trials) {
            if (!(t.p0 > plo && t.p0 < phi && t.lambda0 > 0.0)) continue;
            const double ft = objective(t);
            if (ft < fbest) {
                best = t;
                fbest = ft;
                improved = true;
            }
        }
        if (!improved) {
            sp *= 0.5;
            sl *= 0.5;
        }
    }
    return {best, fbest};
}

}  // namespace pricefb
