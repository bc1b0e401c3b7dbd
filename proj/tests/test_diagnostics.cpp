// Tests for the diagnostics engine: soft-cutoff charge moments, the pairwise
// repulsion moment against half the squared moment, virial ledgers for both
// solvers against closed forms, rearrangement margins, running time averages,
// and the time-averaged excess-charge certificate on synthetic series.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "vpatom/diagnostics.hpp"
#include "vpatom/scenario.hpp"
#include "vpatom/tf_hydro.hpp"
#include "vpatom/vlasov.hpp"
#include "vpatom/weights.hpp"

using namespace vpatom;

namespace {

RadialDensity owned_density(const RadialGrid& g, std::vector<double> rho,
                            std::vector<double>& storage) {
    storage = std::move(rho);
    RadialDensity d;
    d.grid = &g;
    d.rho = storage;
    return d;
}

std::vector<double> exponential_rho(const RadialGrid& g, double n, double a) {
    std::vector<double> rho(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        rho[i] = n * a * a * a / (8.0 * PhysicalConstants::pi) * std::exp(-a * g.r[i]);
    return rho;
}

// Mass m concentrated in the single cell whose node is nearest to r_star.
std::vector<double> single_cell_rho(const RadialGrid& g, double r_star, double m,
                                    std::size_t* cell = nullptr) {
    std::vector<double> rho(g.size(), 0.0);
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
        if (std::abs(g.r[i] - r_star) < std::abs(g.r[best] - r_star)) best = i;
    rho[best] = m / g.vol[best];
    if (cell) *cell = best;
    return rho;
}

} // namespace

TEST_CASE("soft-cutoff moment interpolates between zero and the full charge") {
    RadialGrid g(0.1, 30.0, 160);
    std::vector<double> keep;

    SECTION("point mass closed form") {
        std::size_t cell = 0;
        RadialDensity d = owned_density(g, single_cell_rho(g, 4.0, 2.5, &cell), keep);
        const double r = g.r[cell];
        for (double R : {1.0, 5.0, 20.0}) {
            const double expect = 2.5 / (1.0 + (r / R) * (r / R));
            CHECK(moment_m_r(d, R) == Catch::Approx(expect).epsilon(1e-13));
        }
    }

    SECTION("monotone in R and saturating to the total") {
        RadialDensity d = owned_density(g, exponential_rho(g, 0.7, 1.1), keep);
        const double n = d.total_charge();
        double prev = 0.0;
        for (double R : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
            const double m = moment_m_r(d, R);
            CHECK(m > prev);
            CHECK(m < n);
            prev = m;
        }
        CHECK(moment_m_r(d, 1e6) == Catch::Approx(n).epsilon(1e-9));
    }
}

TEST_CASE("ball particle count honors the radius cutoff") {
    RadialGrid g(0.1, 30.0, 160);
    std::vector<double> k1, k2;
    std::vector<double> rho = single_cell_rho(g, 2.0, 1.5);
    std::vector<double> rho2 = single_cell_rho(g, 12.0, 0.5);
    for (std::size_t i = 0; i < g.size(); ++i) rho[i] += rho2[i];
    RadialDensity d = owned_density(g, rho, k1);

    CHECK(particle_count(d, 1.0) == 0.0);
    CHECK(particle_count(d, 6.0) == Catch::Approx(1.5).epsilon(1e-13));
    CHECK(particle_count(d, 30.0) == Catch::Approx(2.0).epsilon(1e-13));
    CHECK_THROWS_AS(particle_count(d, -1.0), std::invalid_argument);
}

TEST_CASE("pairwise repulsion moment dominates half the squared soft count") {
    RadialGrid g(0.1, 25.0, 96);
    std::vector<double> keep;

    std::vector<std::vector<double>> densities;
    densities.push_back(exponential_rho(g, 1.0, 1.3));
    densities.push_back(single_cell_rho(g, 2.0, 1.0));
    {
        std::vector<double> two = single_cell_rho(g, 1.0, 0.8);
        std::vector<double> far = single_cell_rho(g, 15.0, 1.2);
        for (std::size_t i = 0; i < g.size(); ++i) two[i] += far[i];
        densities.push_back(two);
    }

    for (const std::vector<double>& rho : densities) {
        RadialDensity d = owned_density(g, rho, keep);
        for (double R : {2.0, 5.0, 10.0, 40.0}) {
            RepulsionKernelTable table(g, R);
            const double m = moment_m_r(d, R);
            const double pair = table.half_double_sum(d);
            INFO("R = " << R);
            CHECK(pair >= 0.5 * m * m - 1e-12 * m * m);
        }
    }

    SECTION("table agrees with the direct double sum") {
        RadialDensity d = owned_density(g, exponential_rho(g, 1.0, 1.3), keep);
        RepulsionKernelTable table(g, 5.0);
        double direct = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j)
                direct += g.vol[i] * d.rho[i] * g.vol[j] * d.rho[j] *
                          sphere_avg_kernel(g.r[i] / 5.0, g.r[j] / 5.0);
        CHECK(table.half_double_sum(d) == Catch::Approx(0.5 * direct).epsilon(1e-12));
        CHECK_THROWS_AS(
            [&] {
                RadialGrid other(0.1, 25.0, 48);
                RepulsionKernelTable t2(other, 5.0);
                return t2.half_double_sum(d);
            }(),
            std::invalid_argument);
    }
}

TEST_CASE("kinetic virial ledger matches Gaussian closed forms") {
    // f = q exp(-((w-v0)^2 + l^2/r^2)/s^2): per unit mass <w> = v0,
    // <w^2> = s^2/2 + v0^2, <l^2/r^2> = s^2, so both reductions have
    // density-weighted closed forms.
    PhaseGrid g(RadialGrid(0.5, 2.0, 48), 128, 4.0, 32, 8.0);
    PhysicalConstants pc;
    const double s = 0.8;

    auto fill = [&](VlasovState& st, double v0) {
        for (std::size_t k = 0; k < g.nl(); ++k)
            for (std::size_t j = 0; j < g.nw; ++j)
                for (std::size_t i = 0; i < g.nr(); ++i) {
                    const double r = g.r.r[i], w = g.w_centers[j], l = g.l_nodes[k];
                    st.at(k, j, i) =
                        pc.q * std::exp(-((w - v0) * (w - v0) + l * l / (r * r)) / (s * s));
                }
    };

    RepulsionKernelTable table(g.r, 10.0);
    WeightParams wp{10.0};

    SECTION("radially boosted cloud") {
        const double v0 = 0.3;
        VlasovState st(g, 1.0, pc);
        fill(st, v0);
        RadialDensity d = st.density();
        VirialLedger v = vlasov_virial(st, d, table);

        double a_exp = 0.0, b_exp = 0.0;
        for (std::size_t i = 0; i < g.r.size(); ++i) {
            const double r = g.r.r[i], vol = g.r.vol[i];
            a_exp += vol * d.rho[i] * g_R_prime(r, wp) * v0;
            b_exp += vol * d.rho[i] *
                     (g_R_double_prime(r, wp) * (0.5 * s * s + v0 * v0) +
                      (g_R_prime(r, wp) / r) * s * s);
        }
        CHECK(v.a_boundary == Catch::Approx(a_exp).epsilon(1e-8));
        CHECK(v.b_term == Catch::Approx(-b_exp).epsilon(1e-8));
        CHECK(v.b_term < 0.0);
        CHECK(v.c_attract == Catch::Approx(v.m_r).epsilon(1e-14));       // Z = 1
        CHECK(v.half_m2 == Catch::Approx(0.5 * v.m_r * v.m_r).epsilon(1e-14));
        CHECK(v.c_repulse > v.half_m2);
        CHECK(v.r3 == v.c_attract);
        CHECK(v.r4 == -v.c_repulse);
    }

    SECTION("unboosted cloud has no net radial momentum moment") {
        VlasovState st(g, 1.0, pc);
        fill(st, 0.0);
        RadialDensity d = st.density();
        VirialLedger v = vlasov_virial(st, d, table);
        CHECK(std::abs(v.a_boundary) <= 1e-12 * std::abs(v.b_term));
    }
}

TEST_CASE("fluid virial ledger matches the analytic velocity field") {
    RadialGrid grid(0.05, 9.0, 256);
    FluidState st(grid, 1.0);
    const double eps = 0.1;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = grid.r[i];
        st.rho[i] = std::exp(-(r - 3.0) * (r - 3.0));
        st.phi[i] = -0.5 * eps * r * r; // u = eps r
    }
    RadialDensity d = st.density();
    RepulsionKernelTable table(grid, 10.0);
    VirialLedger v = fluid_virial(st, d, table);
    WeightParams wp{10.0};

    double a_exp = 0.0, h_exp = 0.0, r2_fd = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = grid.r[i], vol = grid.vol[i];
        a_exp += vol * st.rho[i] * g_R_prime(r, wp) * (eps * r);
        h_exp += vol * st.rho[i] * g_R_double_prime(r, wp) * eps * eps * r * r;
        // independent Laplacian: (1/r^2) d_r(r^2 g_R') by central differences
        const double h = 1e-4 * r;
        const double lap = ((r + h) * (r + h) * g_R_prime(r + h, wp) -
                            (r - h) * (r - h) * g_R_prime(r - h, wp)) /
                           (2.0 * h * r * r);
        r2_fd += vol * std::pow(st.rho[i], 5.0 / 3.0) * lap;
    }
    r2_fd *= -st.pc.gamma_tf() / 5.0;

    CHECK(v.a_boundary == Catch::Approx(a_exp).epsilon(1e-3));
    CHECK(v.hessian_drive == Catch::Approx(h_exp).epsilon(2e-3));
    CHECK(v.hessian_drive >= 0.0);
    CHECK(v.r2 == Catch::Approx(r2_fd).epsilon(1e-7));
    CHECK(v.r2 < 0.0); // Laplacian of the cutoff weight is positive
    CHECK(v.b_term == 0.0);
}

TEST_CASE("rearrangement margin is nonnegative and vanishes on saturated states") {
    PhysicalConstants pc;

    SECTION("smooth-edged saturated shell sits at the equality case") {
        PhaseGrid g(RadialGrid(0.2, 4.0, 96), 192, 2.0, 32, 5.0);
        VlasovState st(g, 1.0, pc);
        auto pf = [](double r) { return 1.4 * std::exp(-0.3 * (r - 1.0) * (r - 1.0)); };
        const double edge = 3.0 * g.dw;
        for (std::size_t k = 0; k < g.nl(); ++k)
            for (std::size_t j = 0; j < g.nw; ++j)
                for (std::size_t i = 0; i < g.nr(); ++i) {
                    const double r = g.r.r[i], w = g.w_centers[j], l = g.l_nodes[k];
                    const double p = std::sqrt(w * w + l * l / (r * r));
                    const double u = (pf(r) - p) / edge;
                    const double sm =
                        u >= 1.0 ? 1.0
                                 : (u <= 0.0 ? 0.0 : u * u * u * (10.0 + u * (-15.0 + 6.0 * u)));
                    st.at(k, j, i) = pc.q * sm;
                }
        EnergyBreakdown e;
        e.kinetic = st.kinetic_energy();
        const double m = rearrangement_margin(e, st.density(), pc);
        CHECK(m >= 0.0);
        CHECK(m <= 5e-3 * e.kinetic); // nearly saturated: margin is tiny
    }

    SECTION("bulk motion costs strictly extra kinetic energy") {
        PhaseGrid g(RadialGrid(0.2, 4.0, 96), 192, 2.0, 32, 5.0);
        VlasovState st(g, 1.0, pc);
        for (std::size_t k = 0; k < g.nl(); ++k)
            for (std::size_t j = 0; j < g.nw; ++j)
                for (std::size_t i = 0; i < g.nr(); ++i) {
                    const double r = g.r.r[i], w = g.w_centers[j], l = g.l_nodes[k];
                    st.at(k, j, i) =
                        pc.q * std::exp(-((w - 0.5) * (w - 0.5) + l * l / (r * r)) / 0.09);
                }
        EnergyBreakdown e;
        e.kinetic = st.kinetic_energy();
        const double m = rearrangement_margin(e, st.density(), pc);
        CHECK(m > 0.5 * e.kinetic);
    }

    SECTION("fluid states count internal energy as the positive part") {
        RadialGrid grid(0.05, 9.0, 128);
        FluidState st(grid, 1.0);
        for (std::size_t i = 0; i < grid.size(); ++i)
            st.rho[i] = std::exp(-grid.r[i]);
        EnergyBreakdown e = fluid_energy_breakdown(st);
        // at rest the internal energy equals the rearrangement bound exactly
        const double m = rearrangement_margin(e, st.density(), st.pc, st.pressure_scale);
        CHECK(std::abs(m) <= 1e-12 * e.internal);
    }
}

TEST_CASE("running time averager is exact on piecewise-linear series") {
    TimeAverager avg(2);
    // irregular sampling of v0 = 3t + 1 and v1 = -2t
    double ts[] = {0.0, 0.3, 0.35, 0.9, 1.6, 2.0};
    for (double t : ts) avg.add(t, {3.0 * t + 1.0, -2.0 * t});
    CHECK(avg.elapsed() == Catch::Approx(2.0).epsilon(1e-15));
    CHECK(avg.average(0) == Catch::Approx(3.0 * 2.0 / 2.0 + 1.0).epsilon(1e-14));
    CHECK(avg.average(1) == Catch::Approx(-2.0).epsilon(1e-14));

    SECTION("before any time elapses the average is the last sample") {
        TimeAverager one(1);
        one.add(5.0, {42.0});
        CHECK(one.elapsed() == 0.0);
        CHECK(one.average(0) == 42.0);
    }

    SECTION("rejects wrong widths and backwards time") {
        TimeAverager two(2);
        two.add(0.0, {1.0, 2.0});
        CHECK_THROWS_AS(two.add(1.0, {1.0}), std::invalid_argument);
        CHECK_THROWS_AS(two.add(-1.0, {1.0, 2.0}), std::invalid_argument);
    }
}

TEST_CASE("certificate verdicts separate healthy from violating series") {
    auto make_input = [](double m_level, double ball_level) {
        CertificateInput in;
        in.Z = 1.0;
        in.R = 5.0;
        in.D = 10.0;
        in.n0 = 1.0;
        for (int s = 0; s <= 600; ++s) {
            const double t = 0.1 * s;
            in.t.push_back(t);
            in.m_r.push_back(m_level + 0.1 * std::sin(2.0 * t));
            in.a_boundary.push_back(0.3 * std::cos(0.7 * t));
            in.n_ball.push_back(ball_level);
        }
        return in;
    };

    SECTION("bounded oscillating series passes all four clauses") {
        CertificateVerdict v = evaluate_certificate(make_input(0.8, 0.9));
        CHECK(v.margin_ok);
        CHECK(v.bound_2z_ok);
        CHECK(v.a_term_ok);
        CHECK(v.ball_ok);
        CHECK(v.ok);
        CHECK(v.avg_m_r == Catch::Approx(0.8).margin(2e-3));
        CHECK(v.margin == Catch::Approx(1.0 * 0.8 - 0.5 * 0.64).margin(2e-3));
        // decay(T) = 2 max|a| / T with max|a| = 0.3 over T = 60
        CHECK(v.decay_final == Catch::Approx(0.6 / 60.0).epsilon(1e-2));
        CHECK(v.worst_margin_slack > 0.0);
    }

    SECTION("charge average above twice the nuclear charge fails") {
        CertificateVerdict v = evaluate_certificate(make_input(2.3, 0.9));
        CHECK_FALSE(v.bound_2z_ok);
        CHECK_FALSE(v.margin_ok); // Z<M> - <M>^2/2 is deeply negative
        CHECK(v.max_avg_m_r > 2.0);
        CHECK_FALSE(v.ok);
    }

    SECTION("overfull ball average fails the geometric clause") {
        // (1 + (D/R)^2)(2Z + tol) = 5 * 2.002 with these parameters
        CertificateVerdict v = evaluate_certificate(make_input(0.8, 20.0));
        CHECK_FALSE(v.ball_ok);
        CHECK_FALSE(v.ok);
    }

    SECTION("needs at least two samples") {
        CertificateInput in;
        in.t = {0.0};
        in.m_r = {1.0};
        in.a_boundary = {0.0};
        in.n_ball = {0.0};
        CHECK_THROWS_AS(evaluate_certificate(in), std::invalid_argument);
    }
}

TEST_CASE("uniform energy bound right-hand side") {
    CHECK(uniform_bound_rhs(-0.5, 1.0, -0.7687451242202145) ==
          Catch::Approx(2.8742326560363894).epsilon(1e-14));
    CHECK(uniform_bound_rhs(1.25, 2.0, -1.0) ==
          Catch::Approx(27.898416831491192).epsilon(1e-14));
    // deeper initial binding tightens the bound
    CHECK(uniform_bound_rhs(-2.0, 1.0, -0.7687451242202145) <
          uniform_bound_rhs(-0.5, 1.0, -0.7687451242202145));
}
