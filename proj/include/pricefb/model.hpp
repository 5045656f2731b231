#pragma once

#include <utility>

#include "pricefb/errors.hpp"

namespace pricefb {

/// Fixed geometry of the problem on the interval [-A, B].
///
/// The diffusion constant D is kept for completeness but the scaling
/// sigma^2/2 = 1 is baked into every formula; a non-unit D only rescales
/// time in reports, never the equations.
struct ModelParams {
    double A = 1.0;   ///< left endpoint is -A
    double B = 1.0;   ///< right endpoint
    double a = 0.4;   ///< transaction cost, must satisfy a < min(A,B)/2
    double D = 1.0;   ///< diffusion constant

    double length() const { return A + B; }
};

/// Throws InvalidParams naming the violated inequality.
void validate_params(const ModelParams& prm);

/// One member of the two-parameter family of piecewise-linear stationary
/// states: root position p0 and slope magnitude lambda0.
struct Equilibrium {
    double p0 = 0.0;
    double lambda0 = 1.0;
};

void validate_equilibrium(const Equilibrium& e, const ModelParams& prm);

struct MassPair {
    double m1 = 0.0;  ///< buyer-side mass, integral of f left of the root
    double m2 = 0.0;  ///< vendor-side mass, minus the integral right of it
};

/// Bounds on the ratio m1/m2 inside which a stationary state exists.
struct RatioBounds {
    double lo = 0.0;
    double hi = 0.0;
};

RatioBounds admissible_ratio_bounds(const ModelParams& prm);

bool admissible(const MassPair& m, const ModelParams& prm);

/// True when m1/m2 sits exactly on an admissibility bound (relative
/// tolerance rtol); such masses are accepted but put the root on the edge
/// of its open interval, so callers may want to surface a warning.
bool at_admissibility_boundary(const MassPair& m, const ModelParams& prm, double rtol = 1e-12);

/// Unique stationary state carrying the given side masses.
/// Throws NotAdmissible when the mass ratio falls outside the bounds.
Equilibrium equilibrium_from_masses(const MassPair& m, const ModelParams& prm);

/// Side masses of a stationary state; algebraic inverse of
/// equilibrium_from_masses.
MassPair masses_of_equilibrium(const Equilibrium& e, const ModelParams& prm);

/// Pointwise value of the piecewise-linear stationary state.
/// Throws OutOfDomain for x outside [-A, B].
double eval_equilibrium(const Equilibrium& e, const ModelParams& prm, double x);

}  // namespace pricefb
