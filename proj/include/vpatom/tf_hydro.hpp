#pragma once

// Spherically symmetric irrotational Thomas-Fermi hydrodynamics.
//
// Fields: density rho(r) and velocity potential phi(r) with u = -d_r phi.
//   d_t rho = -(1/r^2) d_r (r^2 rho u)
//   d_t phi = (1/2)(d_r phi)^2 + h(rho) - Z/r + V_mf,   h = (gamma/2) rho^(2/3)
// Continuity uses a conservative first-order upwind finite-volume flux, the
// potential a local Lax-Friedrichs monotone Hamiltonian; time stepping is
// Heun's method (strong-stability-preserving RK2), which keeps rho >= 0 under
// the CFL limit because it averages two positive Euler stages.  Mass leaves
// only through the outflow-limited outer face, accumulated in `escaped`.
//
// Test knobs: `pressure_scale` / `field_scale` scale the enthalpy and the
// electrostatic force (0 turns them off), enabling closed-form checks such as
// force-free self-similar dilation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "vpatom/constants.hpp"
#include "vpatom/radial_field.hpp"
#include "vpatom/radial_grid.hpp"

namespace vpatom {

struct FluidState {
    RadialGrid grid;
    std::vector<double> rho;
    std::vector<double> phi;
    double Z = 1.0;
    PhysicalConstants pc{};
    double pressure_scale = 1.0;
    double field_scale = 1.0;
    double t = 0.0;
    double escaped = 0.0;

    FluidState(RadialGrid g, double Z_, PhysicalConstants pc_ = {})
        : grid(std::move(g)), rho(grid.size(), 0.0), phi(grid.size(), 0.0), Z(Z_), pc(pc_) {}

    RadialDensity density() const {
        RadialDensity d;
        d.grid = &grid;
        d.rho = rho;
        return d;
    }

    double total_mass() const {
        double n = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) n += grid.vol[i] * rho[i];
        return n;
    }

    // Node velocity u = -d_r phi (central differences, one-sided at the ends).
    std::vector<double> velocity() const {
        const std::size_t m = grid.size();
        std::vector<double> u(m);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t a = (i == 0) ? 0 : i - 1;
            const std::size_t b = (i + 1 == m) ? i : i + 1;
            u[i] = -(phi[b] - phi[a]) / (grid.r[b] - grid.r[a]);
        }
        return u;
    }

    double sound_speed(double rho_i) const {
        // c^2 = dP/drho = (gamma/3) rho^(2/3)
        return std::sqrt(pc.gamma_tf() / 3.0 * pressure_scale) * std::cbrt(std::max(rho_i, 0.0));
    }

    double admissible_dt(double cfl = 0.4) const {
        std::vector<double> u = velocity();
        double dt = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double speed = std::abs(u[i]) + sound_speed(rho[i]) + 1e-300;
            dt = std::min(dt, cfl * grid.dr[i] / speed);
        }
        return dt;
    }

    void step(double dt) {
        const std::size_t m = grid.size();
        std::vector<double> drho(m), dphi(m), rho1(m), phi1(m);
        double out1 = rhs(rho, phi, drho, dphi);
        for (std::size_t i = 0; i < m; ++i) {
            rho1[i] = rho[i] + dt * drho[i];
            phi1[i] = phi[i] + dt * dphi[i];
        }
        std::vector<double> drho2(m), dphi2(m);
        double out2 = rhs(rho1, phi1, drho2, dphi2);
        for (std::size_t i = 0; i < m; ++i) {
            rho[i] = 0.5 * (rho[i] + rho1[i] + dt * drho2[i]);
            phi[i] = 0.5 * (phi[i] + phi1[i] + dt * dphi2[i]);
        }
        escaped += 0.5 * dt * (out1 + out2);
        t += dt;
    }

    // Writes d_t rho and d_t phi; returns the instantaneous outflow rate
    // through the outer face (mass per unit time).
    double rhs(const std::vector<double>& rho_in, const std::vector<double>& phi_in,
               std::vector<double>& drho, std::vector<double>& dphi) const {
        const std::size_t m = grid.size();

        RadialDensity d;
        d.grid = &grid;
        d.rho = rho_in;
        FieldSnapshot field = solve_field(d, Z);

        // --- continuity: upwind fluxes on interior faces -------------------
        std::vector<double> flux(m + 1, 0.0); // mass per time per area, faces 0..m
        std::vector<double> uface(m + 1, 0.0);
        for (std::size_t e = 1; e < m; ++e) {
            const double u = -(phi_in[e] - phi_in[e - 1]) / (grid.r[e] - grid.r[e - 1]);
            uface[e] = u;
            flux[e] = u * (u > 0.0 ? rho_in[e - 1] : rho_in[e]);
        }
        const double u_out = std::max(uface[m - 1], 0.0); // outflow only
        uface[m] = u_out;
        flux[m] = u_out * rho_in[m - 1];
        auto area = [&](std::size_t e) {
            return 4.0 * PhysicalConstants::pi * grid.edge[e] * grid.edge[e];
        };
        for (std::size_t i = 0; i < m; ++i)
            drho[i] = -(area(i + 1) * flux[i + 1] - area(i) * flux[i]) / grid.vol[i];

        // --- Hamilton-Jacobi update for phi --------------------------------
        const double gam = pc.gamma_tf();
        for (std::size_t i = 0; i < m; ++i) {
            const double a = (i == 0) ? (phi_in[1] - phi_in[0]) / (grid.r[1] - grid.r[0])
                                      : (phi_in[i] - phi_in[i - 1]) / (grid.r[i] - grid.r[i - 1]);
            const double b = (i + 1 == m)
                                 ? a
                                 : (phi_in[i + 1] - phi_in[i]) / (grid.r[i + 1] - grid.r[i]);
            const double p = 0.5 * (a + b);
            const double sigma = std::max(std::abs(a), std::abs(b));
            const double source =
                pressure_scale * 0.5 * gam * std::cbrt(rho_in[i] * rho_in[i]) +
                field_scale * (-Z / grid.r[i] + field.v_mf[i]);
            dphi[i] = 0.5 * p * p + 0.5 * sigma * (b - a) + source;
        }
        return area(m) * flux[m];
    }
};

struct HydroEnergy {
    double kinetic = 0.0;
    double internal = 0.0;
    double attraction = 0.0;
    double repulsion = 0.0;
    double total = 0.0;
};

inline HydroEnergy hydro_energy(const FluidState& st) {
    HydroEnergy e;
    std::vector<double> u = st.velocity();
    const double gam = st.pc.gamma_tf();
    for (std::size_t i = 0; i < st.grid.size(); ++i) {
        const double vol = st.grid.vol[i];
        e.kinetic += 0.5 * vol * st.rho[i] * u[i] * u[i];
        e.internal += st.pressure_scale * 0.3 * gam * vol * std::pow(st.rho[i], 5.0 / 3.0);
        e.attraction += st.field_scale * (-st.Z) * vol * st.rho[i] / st.grid.r[i];
    }
    RadialDensity d = st.density();
    e.repulsion = st.field_scale * coulomb_energy(d, solve_field(d, st.Z));
    e.total = e.kinetic + e.internal + e.attraction + e.repulsion;
    return e;
}

} // namespace vpatom
