#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pricefb/grid.hpp"

using namespace pricefb;

namespace {
const ModelParams kSym{1.0, 1.0, 0.4, 1.0};

double observed_order(double err_coarse, double err_fine) {
    return std::log2(err_coarse / err_fine);
}
}  // namespace

TEST_CASE("make_grid spacing and bounds") {
    const Grid g = make_grid(kSym, 201);
    CHECK(g.spacing() == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(g.node(0) == -1.0);
    CHECK(g.node(200) == doctest::Approx(1.0).epsilon(1e-15));

    const Grid ga = make_grid(ModelParams{1.0, 2.0, 0.4, 1.0}, 301);
    CHECK(ga.spacing() == doctest::Approx(0.01).epsilon(1e-15));

    CHECK_THROWS_AS(make_grid(kSym, 5), Error);
}

TEST_CASE("sample evaluates pointwise") {
    const Grid g = make_grid(kSym, 201);
    const GridFunction ones = sample(g, [](double) { return 1.0; });
    for (double v : ones.values) CHECK(v == 1.0);

    const GridFunction eq = sample(g, Equilibrium{0.0, 0.9375});
    CHECK(eq.values[100] == 0.0);  // node at x = 0

    const GridFunction id = sample(g, [](double x) { return x; });
    CHECK(id.values[0] == -1.0);
    CHECK(id.values[1] == doctest::Approx(-0.99).epsilon(1e-14));
}

TEST_CASE("integrate: trapezoid with exact partial cells") {
    const Grid g = make_grid(kSym, 201);
    const GridFunction ones = sample(g, [](double) { return 1.0; });
    CHECK(integrate(ones, -1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));

    // kinks of the equilibrium land on nodes, so side masses are exact
    const GridFunction eq = sample(g, Equilibrium{0.0, 0.9375});
    CHECK(integrate(eq, -1.0, 0.0) == doctest::Approx(0.3).epsilon(1e-13));

    const GridFunction id = sample(g, [](double x) { return x; });
    CHECK(integrate(id, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-13));

    // piecewise-linear with kinks on nodes: exact also on off-node windows
    CHECK(integrate(id, -0.505, 0.505) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK_THROWS_AS(integrate(id, -2.0, 0.0), Error);
}

TEST_CASE("interpolate is the linear interpolant") {
    const Grid g = make_grid(kSym, 201);
    GridFunction f(g);
    f.values[100] = 0.0;
    f.values[101] = 1.0;
    CHECK(interpolate(f, g.node(101)) == 1.0);
    CHECK(interpolate(f, 0.005) == doctest::Approx(0.5).epsilon(1e-12));

    // standard interpolation bound h^2 max|f''| / 8 with f'' = 2 for x^2
    const GridFunction sq = sample(g, [](double x) { return x * x; });
    const double h = g.spacing();
    const double x = 0.10371;
    CHECK(std::abs(interpolate(sq, x) - x * x) <= h * h / 4.0 + 1e-15);
}

TEST_CASE("derivative_at: local quadratic is exact on low-order polynomials") {
    const Grid g = make_grid(kSym, 201);
    const GridFunction id = sample(g, [](double x) { return x; });
    CHECK(derivative_at(id, 0.137, 1) == doctest::Approx(1.0).epsilon(1e-12));

    const GridFunction sq = sample(g, [](double x) { return x * x; });
    CHECK(derivative_at(sq, g.node(57), 2) == doctest::Approx(2.0).epsilon(1e-9));

    const GridFunction sn = sample(g, [](double x) { return std::sin(M_PI * x); });
    CHECK(derivative_at(sn, 0.0, 1) == doctest::Approx(M_PI).epsilon(1e-3 / M_PI));

    CHECK_THROWS_AS(derivative_at(sq, -1.0 + 0.5 * g.spacing(), 2), Error);
}

TEST_CASE("derivative_at converges at the expected orders") {
    // x sits one third of a cell past a node on every level (theta = 1/3
    // alternates with 2/3 under halving, keeping the error constant fixed)
    const double x = -1.0 + (60.0 + 1.0 / 3.0) * 0.02;
    auto err = [&](int n, int order) {
        const Grid g = make_grid(kSym, n);
        const GridFunction f = sample(g, [](double x) { return std::sin(1.7 * x + 0.3); });
        const double exact = (order == 1) ? 1.7 * std::cos(1.7 * x + 0.3)
                                          : -1.7 * 1.7 * std::sin(1.7 * x + 0.3);
        return std::abs(derivative_at(f, x, order) - exact);
    };
    CHECK(0.5 * (observed_order(err(101, 1), err(201, 1)) +
                 observed_order(err(201, 1), err(401, 1))) >= 1.9);
    CHECK(0.5 * (observed_order(err(101, 2), err(201, 2)) +
                 observed_order(err(201, 2), err(401, 2))) >= 0.9);
}

TEST_CASE("deposit_delta carries exactly its strength") {
    const Grid g = make_grid(kSym, 201);
    const double h = g.spacing();

    const GridFunction on_node = deposit_delta(g, g.node(37), 2.5);
    CHECK(on_node.values[37] == doctest::Approx(2.5 / h).epsilon(1e-14));
    CHECK(on_node.values[38] == 0.0);

    const GridFunction mid = deposit_delta(g, g.node(50) + 0.5 * h, 1.0);
    CHECK(mid.values[50] == doctest::Approx(0.5 / h).epsilon(1e-12));
    CHECK(mid.values[51] == doctest::Approx(0.5 / h).epsilon(1e-12));

    for (double c : {-0.731, -0.4, 0.0123456, 0.39999, 0.97}) {
        const GridFunction d = deposit_delta(g, c, 0.773);
        CHECK(integrate(d) == doctest::Approx(0.773).epsilon(1e-14));
    }
    CHECK_THROWS_AS(deposit_delta(g, -1.0 + 0.5 * h, 1.0), Error);
}

TEST_CASE("deposit pairing converges to point evaluation at order >= 2") {
    const double c = -1.0 + (60.0 + 1.0 / 3.0) * 0.02;  // theta-stable under halving
    auto err = [&](int n) {
        const Grid g = make_grid(kSym, n);
        const GridFunction d = deposit_delta(g, c, 1.0);
        const GridFunction phi = sample(g, [](double x) { return std::cos(1.3 * x); });
        double acc = 0.0;
        const double h = g.spacing();
        for (int i = 0; i < n; ++i) {
            const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            acc += w * d.values[i] * phi.values[i];
        }
        return std::abs(acc * h - std::cos(1.3 * c));
    };
    CHECK(0.5 * (observed_order(err(101), err(201)) +
                 observed_order(err(201), err(401))) >= 1.9);
}

TEST_CASE("integrate is exact on piecewise-linear functions with node kinks") {
    std::mt19937_64 rng(31);
    auto unit = [&] { return (rng() >> 11) * 0x1.0p-53; };
    const Grid g = make_grid(kSym, 161);  // h = 0.0125
    for (int trial = 0; trial < 25; ++trial) {
        // random continuous piecewise-linear function with kinks on nodes
        const int k1 = 20 + static_cast<int>(unit() * 50);
        const int k2 = k1 + 10 + static_cast<int>(unit() * 60);
        const double s0 = 2.0 * unit() - 1.0, s1 = 2.0 * unit() - 1.0, s2 = 2.0 * unit() - 1.0;
        const double x1 = g.node(k1), x2 = g.node(k2);
        auto f = [&](double x) {
            if (x <= x1) return s0 * (x - x1);
            if (x <= x2) return s1 * (x - x1);
            return s1 * (x2 - x1) + s2 * (x - x2);
        };
        auto exact = [&](double lo, double hi) {
            // antiderivative of the same piecewise-linear function
            auto F = [&](double x) {
                if (x <= x1) return 0.5 * s0 * (x - x1) * (x - x1);
                if (x <= x2) return 0.5 * s1 * (x - x1) * (x - x1);
                const double mid = 0.5 * s1 * (x2 - x1) * (x2 - x1);
                return mid + s1 * (x2 - x1) * (x - x2) + 0.5 * s2 * (x - x2) * (x - x2);
            };
            return F(hi) - F(lo);
        };
        const GridFunction fs = sample(g, f);
        const double lo = -1.0 + 2.0 * unit() * 0.3;
        const double hi = 1.0 - 2.0 * unit() * 0.3;
        CHECK(std::abs(integrate(fs, lo, hi) - exact(lo, hi)) <= 1e-14);
    }
}

TEST_CASE("derivative order outside {1,2} is rejected") {
    const Grid g = make_grid(kSym, 64);
    const GridFunction f = sample(g, [](double x) { return x; });
    CHECK_THROWS_AS(derivative_at(f, 0.0, 3), Error);
    CHECK_THROWS_AS(derivative_at(f, 0.0, 0), Error);
}

TEST_CASE("discrete norms") {
    const Grid g = make_grid(kSym, 401);
    const GridFunction ones = sample(g, [](double) { return 1.0; });
    const Norms n1 = discrete_norms(ones);
    CHECK(n1.l2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(n1.linf == 1.0);
    CHECK(n1.h1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    const Norms n0 = discrete_norms(GridFunction(g));
    CHECK(n0.l2 == 0.0);
    CHECK(n0.linf == 0.0);
    CHECK(n0.h1 == 0.0);

    const Grid gf = make_grid(kSym, 2001);
    const GridFunction id = sample(gf, [](double x) { return x; });
    const Norms ni = discrete_norms(id);
    CHECK(ni.l2 == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-6));
    CHECK(ni.linf == 1.0);
}

TEST_CASE("gridfunction CSV round trip") {
    const Grid g = make_grid(kSym, 64);
    const GridFunction f = sample(g, [](double x) { return std::sin(3.0 * x) + 0.123456789012345; });
    std::stringstream ss;
    write_csv(f, ss);
    const GridFunction back = read_gridfunction_csv(ss, kSym);
    REQUIRE(back.size() == f.size());
    for (int i = 0; i < f.size(); ++i) CHECK(back.values[i] == f.values[i]);
}
