#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>

#include <vpatom/radial_field.hpp>
#include <vpatom/radial_grid.hpp>

using namespace vpatom;

namespace {

// Exponential cloud rho(r) = N alpha^3/(8 pi) exp(-alpha r): closed forms
//   total charge  N
//   V(0)          N alpha / 2
//   D[rho]        5 alpha N^2 / 32
//   Int rho / r   N alpha / 2.
RadialDensity exponential_cloud(const RadialGrid& g, double N, double alpha) {
    RadialDensity d(g);
    const double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < g.size(); ++i)
        d.rho[i] = N * alpha * alpha * alpha / (8.0 * pi) * std::exp(-alpha * g.r[i]);
    return d;
}

} // namespace

TEST_CASE("empty density gives the bare nuclear field") {
    RadialGrid g(0.01, 10.0, 64);
    RadialDensity d(g);
    const FieldSnapshot f = solve_field(d, 2.0);
    CHECK(f.total_charge == 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(f.v_mf[i] == 0.0);
        CHECK(f.q_enclosed[i] == 0.0);
        CHECK(f.k_r[i] == Catch::Approx(-2.0 / (g.r[i] * g.r[i])).epsilon(1e-15));
    }
}

TEST_CASE("two node shells are handled exactly") {
    RadialGrid g(0.05, 20.0, 96);
    RadialDensity d(g);
    const std::size_t i1 = 20, i2 = 70;
    const double q1 = 0.7, q2 = 1.9;
    d.rho[i1] = q1 / g.vol[i1];
    d.rho[i2] = q2 / g.vol[i2];
    const double r1 = g.r[i1], r2 = g.r[i2];

    const FieldSnapshot f = solve_field(d, 1.0);
    CHECK(f.total_charge == Catch::Approx(q1 + q2).epsilon(1e-14));
    CHECK(d.total_charge() == Catch::Approx(f.total_charge).epsilon(1e-14));

    // Potential of two shells: q/max(r, r_shell) each.
    for (std::size_t i : {std::size_t{0}, i1 - 1, i1, i1 + 5, i2, i2 + 10, g.size() - 1}) {
        const double expect =
            q1 / std::max(g.r[i], r1) + q2 / std::max(g.r[i], r2);
        CHECK(f.v_mf[i] == Catch::Approx(expect).epsilon(1e-13));
    }

    // Enclosed charge counts half of the shell at its own node.
    CHECK(f.q_enclosed[i1 - 1] == 0.0);
    CHECK(f.q_enclosed[i1] == Catch::Approx(0.5 * q1).epsilon(1e-14));
    CHECK(f.q_enclosed[i1 + 1] == Catch::Approx(q1).epsilon(1e-14));
    CHECK(f.q_enclosed[i2] == Catch::Approx(q1 + 0.5 * q2).epsilon(1e-14));

    // Pair energy: self energies q^2/(2a) plus cross term q1 q2 / r2.
    const double d_exact = q1 * q1 / (2.0 * r1) + q2 * q2 / (2.0 * r2) + q1 * q2 / r2;
    CHECK(coulomb_energy(d, f) == Catch::Approx(d_exact).epsilon(1e-13));

    // Force field outside both shells is Coulombic with the net charge.
    const std::size_t last = g.size() - 1;
    CHECK(f.k_r[last] ==
          Catch::Approx((-1.0 + q1 + q2) / (g.r[last] * g.r[last])).epsilon(1e-13));
}

TEST_CASE("exponential cloud matches closed forms and converges at second order") {
    const double N = 0.8, alpha = 1.3, Z = 1.1;
    const double d_exact = 5.0 * alpha * N * N / 32.0;
    const double attr_exact = -Z * N * alpha / 2.0;

    auto solve_at = [&](std::size_t m) {
        RadialGrid g(1e-3, 40.0 / alpha, m);
        RadialDensity d = exponential_cloud(g, N, alpha);
        const FieldSnapshot f = solve_field(d, Z);
        struct Out {
            double q, dcoul, dfield, attr, v0;
        } out{};
        out.q = f.total_charge;
        out.dcoul = coulomb_energy(d, f);
        out.dfield = coulomb_energy_field_route(d, f);
        out.attr = nuclear_attraction_energy(d, Z);
        out.v0 = f.v_mf[0];
        return out;
    };

    const auto coarse = solve_at(300);
    const auto fine = solve_at(600);

    CHECK(coarse.q == Catch::Approx(N).epsilon(2e-4));
    CHECK(fine.q == Catch::Approx(N).epsilon(5e-5));
    CHECK(fine.dcoul == Catch::Approx(d_exact).epsilon(2e-4));
    CHECK(fine.attr == Catch::Approx(attr_exact).epsilon(2e-4));
    CHECK(fine.v0 == Catch::Approx(N * alpha / 2.0).epsilon(2e-3));

    // The node-shell route and the enclosed-charge route agree on D up to
    // the discretisation of the field between nodes.
    CHECK(fine.dfield == Catch::Approx(fine.dcoul).epsilon(5e-3));

    // Halving the log step cuts the error of the smooth integrals by about
    // four; demand at least a factor 2.5 to allow wobble.
    const double err_c = std::abs(coarse.dcoul - d_exact);
    const double err_f = std::abs(fine.dcoul - d_exact);
    CHECK(err_f < err_c / 2.5);
    const double aerr_c = std::abs(coarse.attr - attr_exact);
    const double aerr_f = std::abs(fine.attr - attr_exact);
    CHECK(aerr_f < aerr_c / 2.5);
}

TEST_CASE("potential is monotone decreasing and Coulombic far outside") {
    RadialGrid g(1e-2, 60.0, 256);
    RadialDensity d = exponential_cloud(g, 1.0, 2.0);
    const FieldSnapshot f = solve_field(d, 1.0);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(f.v_mf[i] <= f.v_mf[i - 1] + 1e-15);
    const std::size_t last = g.size() - 1;
    CHECK(f.v_mf[last] == Catch::Approx(f.total_charge / g.r[last]).epsilon(1e-6));
}
