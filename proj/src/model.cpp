#include "pricefb/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pricefb {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void validate_params(const ModelParams& prm) {
    if (!(prm.A > 0.0)) fail(errc::invalid_params, "A > 0 violated, A = " + fmt(prm.A));
    if (!(prm.B > 0.0)) fail(errc::invalid_params, "B > 0 violated, B = " + fmt(prm.B));
    if (!(prm.a > 0.0)) fail(errc::invalid_params, "a > 0 violated, a = " + fmt(prm.a));
    const double cap = 0.5 * std::min(prm.A, prm.B);
    if (!(prm.a < cap)) {
        fail(errc::invalid_params,
             "a < min(A/2, B/2) violated, a = " + fmt(prm.a) + ", bound = " + fmt(cap));
    }
    if (!(prm.D > 0.0)) fail(errc::invalid_params, "D > 0 violated, D = " + fmt(prm.D));
}

void validate_equilibrium(const Equilibrium& e, const ModelParams& prm) {
    validate_params(prm);
    if (!(e.lambda0 > 0.0)) {
        fail(errc::invalid_params, "lambda0 > 0 violated, lambda0 = " + fmt(e.lambda0));
    }
    if (!(e.p0 > -prm.A + prm.a && e.p0 < prm.B - prm.a)) {
        fail(errc::invalid_params, "p0 outside (-A+a, B-a), p0 = " + fmt(e.p0));
    }
}

RatioBounds admissible_ratio_bounds(const ModelParams& prm) {
    const double s = 2.0 * prm.A + 2.0 * prm.B - 3.0 * prm.a;
    return {prm.a / s, s / prm.a};
}

bool admissible(const MassPair& m, const ModelParams& prm) {
    validate_params(prm);
    if (!(m.m1 > 0.0 && m.m2 > 0.0)) return false;
    const RatioBounds b = admissible_ratio_bounds(prm);
    const double r = m.m1 / m.m2;
    return r >= b.lo && r <= b.hi;
}

bool at_admissibility_boundary(const MassPair& m, const ModelParams& prm, double rtol) {
    const RatioBounds b = admissible_ratio_bounds(prm);
    const double r = m.m1 / m.m2;
    return std::abs(r - b.lo) <= rtol * b.lo || std::abs(r - b.hi) <= rtol * b.hi;
}

Equilibrium equilibrium_from_masses(const MassPair& m, const ModelParams& prm) {
    if (!admissible(m, prm)) {
        const RatioBounds b = admissible_ratio_bounds(prm);
        fail(errc::not_admissible, "m1/m2 = " + fmt(m.m1 / m.m2) + " outside [" + fmt(b.lo) +
                                       ", " + fmt(b.hi) + "]");
    }
    const double msum = m.m1 + m.m2;
    Equilibrium e;
    e.p0 = (-prm.a * (m.m1 - m.m2) - 2.0 * prm.A * m.m2 + 2.0 * prm.B * m.m1) / (2.0 * msum);
    e.lambda0 = msum / (prm.a * (-prm.a + prm.A + prm.B));
    return e;
}

MassPair masses_of_equilibrium(const Equilibrium& e, const ModelParams& prm) {
    MassPair m;
    m.m1 = e.lambda0 * prm.a * (e.p0 - 0.5 * prm.a + prm.A);
    m.m2 = e.lambda0 * prm.a * (prm.B - e.p0 - 0.5 * prm.a);
    return m;
}

double eval_equilibrium(const Equilibrium& e, const ModelParams& prm, double x) {
    if (x < -prm.A || x > prm.B) {
        fail(errc::out_of_domain, "x = " + fmt(x) + " outside [-A, B]");
    }
    if (x <= e.p0 - prm.a) return e.lambda0 * prm.a;
    if (x >= e.p0 + prm.a) return -e.lambda0 * prm.a;
    return -e.lambda0 * (x - e.p0);
}

}  // namespace pricefb
