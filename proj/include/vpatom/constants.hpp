#pragma once

// Unit system and statistics constants shared by all modules.
//
// Atomic-style units throughout: hbar = m = e = 1, so Planck's constant is
// h = 2*pi and the phase-space measure carries a 1/h^3 normalisation.  The
// exclusion bound q counts internal states per phase-space cell (q = 2 for
// spin-1/2 electrons).

#include <cmath>
#include <numbers>

namespace vpatom {

struct PhysicalConstants {
    double q = 2.0;  // phase-space occupancy bound (spin multiplicity)

    static constexpr double pi = std::numbers::pi;

    // Planck constant in these units.
    static constexpr double h() { return 2.0 * pi; }

    // Kinetic prefactor gamma for the degenerate gas:
    //   gamma = (6*pi^2/q)^(2/3),
    // so that a fully filled momentum ball of density rho carries kinetic
    // energy density (3/10)*gamma*rho^(5/3) and pressure (gamma/5)*rho^(5/3).
    double gamma_tf() const { return std::pow(6.0 * pi * pi / q, 2.0 / 3.0); }

    // Fermi momentum of a fully filled ball at density rho.
    double fermi_momentum(double rho) const {
        return std::cbrt(6.0 * pi * pi * rho / q);
    }

    // Density of a fully filled momentum ball of radius pf.
    double ball_density(double pf) const { return q * pf * pf * pf / (6.0 * pi * pi); }
};

} // namespace vpatom
