#include "pricefb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace pricefb {

namespace {
constexpr double kThetaSnap = 1e-9;
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Grid::Grid(const ModelParams& prm, int n) : prm_(prm), n_(n) {
    validate_params(prm);
    if (n < 16) fail(errc::invalid_params, "grid needs n >= 16, got n = " + std::to_string(n));
    h_ = (prm.A + prm.B) / static_cast<double>(n - 1);
}

Grid make_grid(const ModelParams& prm, int n) { return Grid(prm, n); }

Grid::CellPos Grid::locate(double x) const {
    double s = (x - left()) / h_;
    int i = static_cast<int>(std::floor(s));
    double theta = s - i;
    if (theta < kThetaSnap) theta = 0.0;
    if (theta > 1.0 - kThetaSnap) {
        ++i;
        theta = 0.0;
    }
    if (i < 0) {
        i = 0;
        theta = 0.0;
    }
    if (i > n_ - 2) {
        i = n_ - 2;
        theta = 1.0;
    }
    return {i, theta};
}

void Grid::require_inside(double x, const char* who) const {
    const double slack = 1e-12 * (prm_.A + prm_.B);
    if (x < left() - slack || x > right() + slack) {
        fail(errc::out_of_domain, std::string(who) + ": x = " + format_full(x) +
                                      " outside [" + format_full(left()) + ", " +
                                      format_full(right()) + "]");
    }
}

GridFunction::GridFunction(Grid g, std::vector<double> v) : values(std::move(v)), grid_(g) {
    if (static_cast<int>(values.size()) != grid_.size()) {
        fail(errc::invalid_params, "GridFunction value count does not match grid");
    }
}

GridFunction::GridFunction(Grid g) : values(g.size(), 0.0), grid_(g) {}

GridFunction sample(const Grid& g, const std::function<double(double)>& fn) {
    GridFunction f(g);
    for (int i = 0; i < g.size(); ++i) f.values[i] = fn(g.node(i));
    return f;
}

GridFunction sample(const Grid& g, const Equilibrium& e) {
    return sample(g, [&](double x) { return eval_equilibrium(e, g.params(), x); });
}

double interpolate(const GridFunction& f, double x) {
    const Grid& g = f.grid();
    g.require_inside(x, "interpolate");
    const auto [i, theta] = g.locate(x);
    return f.values[i] * (1.0 - theta) + f.values[i + 1] * theta;
}

double integrate(const GridFunction& f, double lo, double hi) {
    const Grid& g = f.grid();
    g.require_inside(lo, "integrate");
    g.require_inside(hi, "integrate");
    if (lo > hi) fail(errc::out_of_domain, "integrate: lo > hi");
    const auto [i0, th0] = g.locate(lo);
    const auto [i1, th1] = g.locate(hi);
    const double h = g.spacing();
    if (i0 == i1) {
        return 0.5 * (interpolate(f, lo) + interpolate(f, hi)) * (hi - lo);
    }
    double acc = 0.0;
    if (th0 > 0.0) {
        const double xr = g.node(i0 + 1);
        acc += 0.5 * (interpolate(f, lo) + f.values[i0 + 1]) * (xr - lo);
    } else {
        acc += 0.5 * (f.values[i0] + f.values[i0 + 1]) * h;
    }
    for (int j = i0 + 1; j < i1; ++j) acc += 0.5 * (f.values[j] + f.values[j + 1]) * h;
    if (th1 > 0.0) {
        acc += 0.5 * (f.values[i1] + interpolate(f, hi)) * (hi - g.node(i1));
    }
    return acc;
}

double integrate(const GridFunction& f) {
    return integrate(f, f.grid().left(), f.grid().right());
}

std::array<std::pair<int, double>, 2> interpolation_weights(const Grid& g, double x) {
    g.require_inside(x, "interpolation_weights");
    const auto [i, theta] = g.locate(x);
    return {{{i, 1.0 - theta}, {i + 1, theta}}};
}

std::array<std::pair<int, double>, 3> derivative_weights(const Grid& g, double x, int order) {
    g.require_inside(x, "derivative_weights");
    if (order != 1 && order != 2) fail(errc::invalid_params, "derivative order must be 1 or 2");
    const double h = g.spacing();
    if (order == 2) {
        if (x - g.left() < 2.0 * h || g.right() - x < 2.0 * h) {
            fail(errc::too_close_to_boundary,
                 "second derivative needs x at distance >= 2h from the endpoints");
        }
    }
    int j = static_cast<int>(std::lround((x - g.left()) / h));
    j = std::clamp(j, 1, g.size() - 2);
    // local quadratic through nodes j-1, j, j+1
    if (order == 2) {
        const double w = 1.0 / (h * h);
        return {{{j - 1, w}, {j, -2.0 * w}, {j + 1, w}}};
    }
    const double dx = x - g.node(j);
    const double w1 = 1.0 / (2.0 * h);
    const double w2 = dx / (h * h);
    return {{{j - 1, -w1 + w2}, {j, -2.0 * w2}, {j + 1, w1 + w2}}};
}

double derivative_at(const GridFunction& f, double x, int order) {
    const auto w = derivative_weights(f.grid(), x, order);
    double acc = 0.0;
    for (const auto& [i, wi] : w) acc += wi * f.values[i];
    return acc;
}

GridFunction deposit_delta(const Grid& g, double c, double strength) {
    g.require_inside(c, "deposit_delta");
    const auto [i, theta] = g.locate(c);
    const int n = g.size();
    const bool ok = (theta == 0.0) ? (i >= 1 && i <= n - 2) : (i >= 1 && i + 1 <= n - 2);
    if (!ok) {
        fail(errc::out_of_domain,
             "deposit_delta: c = " + format_full(c) + " not inside (-A + h, B - h)");
    }
    GridFunction f(g);
    const double h = g.spacing();
    f.values[i] = strength * (1.0 - theta) / h;
    if (theta > 0.0) f.values[i + 1] = strength * theta / h;
    return f;
}

Norms discrete_norms(const GridFunction& f) {
    const Grid& g = f.grid();
    const double h = g.spacing();
    const int n = g.size();
    Norms r;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        sq += w * f.values[i] * f.values[i];
        r.linf = std::max(r.linf, std::abs(f.values[i]));
    }
    sq *= h;
    r.l2 = std::sqrt(sq);
    double dsq = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        const double d = (f.values[i + 1] - f.values[i]) / h;
        dsq += d * d * h;  // exact integral of the interpolant's derivative squared
    }
    r.h1 = std::sqrt(sq + dsq);
    return r;
}

void write_csv(const GridFunction& f, std::ostream& os) {
    os << "x,value\n";
    const Grid& g = f.grid();
    for (int i = 0; i < g.size(); ++i) {
        os << format_full(g.node(i)) << ',' << format_full(f.values[i]) << '\n';
    }
}

void write_csv_file(const GridFunction& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(errc::config_error, "cannot open for writing: " + path);
    write_csv(f, os);
}

GridFunction read_gridfunction_csv(std::istream& is, const ModelParams& prm) {
    std::string line;
    if (!std::getline(is, line)) fail(errc::config_error, "empty GridFunction CSV");
    std::vector<double> xs, vs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) fail(errc::config_error, "bad CSV row: " + line);
        xs.push_back(std::stod(line.substr(0, comma)));
        vs.push_back(std::stod(line.substr(comma + 1)));
    }
    const int n = static_cast<int>(xs.size());
    if (n < 16) fail(errc::config_error, "GridFunction CSV has fewer than 16 rows");
    const double tol = 1e-9 * (prm.A + prm.B);
    if (std::abs(xs.front() + prm.A) > tol || std::abs(xs.back() - prm.B) > tol) {
        fail(errc::config_error, "CSV x-range does not match [-A, B]");
    }
    const double h = (prm.A + prm.B) / (n - 1);
    for (int i = 0; i < n; ++i) {
        if (std::abs(xs[i] - (-prm.A + i * h)) > tol) {
            fail(errc::config_error, "CSV x-column is not the uniform grid");
        }
    }
    return GridFunction(Grid(prm, n), std::move(vs));
}

GridFunction read_gridfunction_csv_file(const std::string& path, const ModelParams& prm) {
    std::ifstream is(path);
    if (!is) fail(errc::config_error, "cannot open for reading: " + path);
    return read_gridfunction_csv(is, prm);
}

}  // namespace pricefb
