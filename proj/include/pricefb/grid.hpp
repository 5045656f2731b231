#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pricefb/model.hpp"

namespace pricefb {

/// Endpoint-inclusive uniform grid on [-A, B]; nodes x_i = -A + i*h.
/// A Grid is a small value: nodes are computed, not stored.
class Grid {
public:
    Grid(const ModelParams& prm, int n);

    int size() const { return n_; }
    double spacing() const { return h_; }
    double left() const { return -prm_.A; }
    double right() const { return prm_.B; }
    const ModelParams& params() const { return prm_; }

    double node(int i) const { return -prm_.A + i * h_; }

    /// Index i of the cell [x_i, x_{i+1}] containing x, clamped to
    /// [0, n-2]; offset theta = (x - x_i)/h is snapped to 0 or 1 when
    /// within 1e-9 of a node so node-aligned coordinates stay exact.
    struct CellPos {
        int i;
        double theta;
    };
    CellPos locate(double x) const;

    /// Throws OutOfDomain unless -A <= x <= B (tiny rounding slack).
    void require_inside(double x, const char* who) const;

    bool operator==(const Grid& other) const {
        return n_ == other.n_ && prm_.A == other.prm_.A && prm_.B == other.prm_.B;
    }

private:
    ModelParams prm_;
    int n_;
    double h_;
};

Grid make_grid(const ModelParams& prm, int n);

/// Values of a scalar function at the grid nodes.
struct GridFunction {
    GridFunction(Grid g, std::vector<double> v);
    explicit GridFunction(Grid g);

    const Grid& grid() const { return grid_; }
    int size() const { return static_cast<int>(values.size()); }

    std::vector<double> values;

private:
    Grid grid_;
};

GridFunction sample(const Grid& g, const std::function<double(double)>& fn);
GridFunction sample(const Grid& g, const Equilibrium& e);

/// Composite trapezoid integral of the piecewise-linear interpolant over
/// [lo, hi]; partial end cells are handled exactly, so the result is exact
/// for piecewise-linear integrands whose kinks lie on nodes or at lo/hi.
double integrate(const GridFunction& f, double lo, double hi);
double integrate(const GridFunction& f);

double interpolate(const GridFunction& f, double x);

/// Derivative of the local quadratic through the three nodes nearest x
/// (order 1), or its constant second derivative (order 2). Order 2
/// requires x at distance >= 2h from both endpoints.
double derivative_at(const GridFunction& f, double x, int order);

/// Two-point hat deposit of a point mass: integrates to exactly strength.
/// Requires c in (-A + h, B - h).
GridFunction deposit_delta(const Grid& g, double c, double strength);

struct Norms {
    double l2 = 0.0;
    double linf = 0.0;
    double h1 = 0.0;
};

Norms discrete_norms(const GridFunction& f);

/// Row functionals used to build discrete operators consistently with
/// interpolate / derivative_at.
std::array<std::pair<int, double>, 2> interpolation_weights(const Grid& g, double x);
std::array<std::pair<int, double>, 3> derivative_weights(const Grid& g, double x, int order);

/// CSV with header "x,value" and full-precision decimals.
void write_csv(const GridFunction& f, std::ostream& os);
void write_csv_file(const GridFunction& f, const std::string& path);

/// Reads a GridFunction written by write_csv; the grid is reconstructed
/// from the x column and must match prm's interval.
GridFunction read_gridfunction_csv(std::istream& is, const ModelParams& prm);
GridFunction read_gridfunction_csv_file(const std::string& path, const ModelParams& prm);

/// Full-precision decimal formatting used by every writer ("%.17g").
std::string format_full(double v);

}  // namespace pricefb
