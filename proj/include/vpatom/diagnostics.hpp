#pragma once

// Run diagnostics: energy breakdowns, soft-cutoff charge moments, virial-type
// ledgers, rearrangement and uniform-norm bounds, and the time-averaged
// excess-charge certificate.
//
// Conventions shared by both solvers:
//   M_R           = sum_i q_i / (1 + (r_i/R)^2)
//   c_attract     = Z * M_R
//   c_repulse     = (1/2) sum_ij q_i q_j kbar(r_i/R, r_j/R)  >= (1/2) M_R^2,
//                   kbar the sphere-averaged repulsion kernel (weights.hpp)
//   a_boundary    = integral of the radial-momentum-weighted moment
//                   (f g_R'(r) w for kinetic states, rho g_R'(r) u for fluid)
//   b_term        = -integral f (g_R'' w^2 + g_R'/r * l^2/r^2)   <= 0
//   hessian_drive = integral rho g_R'' u^2                       >= 0
//   r2            = -(gamma/5) integral rho^(5/3) Lap g_R        <= 0
// The certificate combines Cesaro averages: Z<M_R> - (1/2)<M_R>^2 must stay
// above -decay(T) with decay(T) = c_fit sqrt(N) R^2 / T calibrated from the
// largest observed |a_boundary|.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpatom/constants.hpp"
#include "vpatom/radial_field.hpp"
#include "vpatom/tf_hydro.hpp"
#include "vpatom/vlasov.hpp"
#include "vpatom/weights.hpp"

namespace vpatom {

// ---------------------------------------------------------------------------
// Moments and counts
// ---------------------------------------------------------------------------

inline double moment_m_r(const RadialDensity& d, double R) {
    const RadialGrid& g = *d.grid;
    WeightParams wp{R};
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        m += g.vol[i] * d.rho[i] * moment_weight(g.r[i], wp);
    return m;
}

// Number of particles in the ball of radius D (cells with node inside).
inline double particle_count(const RadialDensity& d, double D) {
    if (D < 0.0) throw std::invalid_argument("particle_count: negative radius");
    const RadialGrid& g = *d.grid;
    double n = 0.0;
    for (std::size_t i = 0; i < g.size() && g.r[i] <= D; ++i) n += g.vol[i] * d.rho[i];
    return n;
}

// ---------------------------------------------------------------------------
// Pairwise repulsion moment via the tabulated sphere-averaged kernel
// ---------------------------------------------------------------------------

class RepulsionKernelTable {
  public:
    RepulsionKernelTable() = default;
    RepulsionKernelTable(const RadialGrid& g, double R) : n_(g.size()), R_(R), k_(n_ * n_) {
        std::vector<double> scaled(n_);
        for (std::size_t i = 0; i < n_; ++i) scaled[i] = g.r[i] / R;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                const double v = sphere_avg_kernel(scaled[i], scaled[j]);
                k_[i * n_ + j] = v;
                k_[j * n_ + i] = v;
            }
        }
    }

    double R() const { return R_; }

    // (1/2) sum_ij q_i q_j kbar(r_i/R, r_j/R); the kernel carries the 1/R
    // scaling of grad g_R . x/|x|^3 pairs already in scaled coordinates.
    double half_double_sum(const RadialDensity& d) const {
        const RadialGrid& g = *d.grid;
        if (g.size() != n_) throw std::invalid_argument("kernel table: grid size mismatch");
        std::vector<double> q(n_);
        for (std::size_t i = 0; i < n_; ++i) q[i] = g.vol[i] * d.rho[i];
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double* row = &k_[i * n_];
            double s = 0.0;
            for (std::size_t j = 0; j < n_; ++j) s += row[j] * q[j];
            acc += q[i] * s;
        }
        return 0.5 * acc;
    }

  private:
    std::size_t n_ = 0;
    double R_ = 0.0;
    std::vector<double> k_;
};

// ---------------------------------------------------------------------------
// Per-radius virial ledger
// ---------------------------------------------------------------------------

struct VirialLedger {
    double R = 0.0;
    double m_r = 0.0;
    double a_boundary = 0.0;
    double b_term = 0.0;          // kinetic dispersion term, <= 0 (kinetic runs)
    double hessian_drive = 0.0;   // fluid transport term, >= 0 (fluid runs)
    double r2 = 0.0;              // pressure term, <= 0 (fluid runs)
    double r3 = 0.0;              // Z * M_R
    double r4 = 0.0;              // -c_repulse
    double c_attract = 0.0;       // Z * M_R
    double c_repulse = 0.0;
    double half_m2 = 0.0;         // (1/2) M_R^2
};

inline void fill_common_ledger(VirialLedger& v, const RadialDensity& d, double Z,
                               const RepulsionKernelTable& table) {
    v.m_r = moment_m_r(d, v.R);
    v.c_attract = Z * v.m_r;
    v.r3 = v.c_attract;
    v.c_repulse = table.half_double_sum(d);
    v.r4 = -v.c_repulse;
    v.half_m2 = 0.5 * v.m_r * v.m_r;
}

inline VirialLedger vlasov_virial(const VlasovState& st, const RadialDensity& d,
                                  const RepulsionKernelTable& table) {
    VirialLedger v;
    v.R = table.R();
    fill_common_ledger(v, d, st.Z(), table);
    WeightParams wp{v.R};
    const PhaseGrid& g = st.grid();
    const std::size_t nr = g.nr(), nw = g.nw, nl = g.nl();
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < nl; ++k) {
        const double l2 = g.l_nodes[k] * g.l_nodes[k];
        double a_sh = 0.0, b_sh = 0.0;
        for (std::size_t i = 0; i < nr; ++i) {
            const double r = g.r.r[i];
            const double gp = g_R_prime(r, wp);
            const double gpp = g_R_double_prime(r, wp);
            const double tang = (gp / r) * (l2 / (r * r));
            double sw_a = 0.0, sw_b = 0.0;
            for (std::size_t j = 0; j < nw; ++j) {
                const double f = st.at(k, j, i);
                if (f == 0.0) continue;
                const double w = g.w_centers[j];
                sw_a += w * f;
                sw_b += (gpp * w * w + tang) * f;
            }
            a_sh += g.r.dr[i] * gp * sw_a;
            b_sh += g.r.dr[i] * sw_b;
        }
        a += g.l_weights[k] * a_sh;
        b += g.l_weights[k] * b_sh;
    }
    const double c = g.dw / PhysicalConstants::pi;
    v.a_boundary = c * a;
    v.b_term = -c * b;
    return v;
}

inline VirialLedger fluid_virial(const FluidState& st, const RadialDensity& d,
                                 const RepulsionKernelTable& table) {
    VirialLedger v;
    v.R = table.R();
    fill_common_ledger(v, d, st.Z, table);
    WeightParams wp{v.R};
    std::vector<double> u = st.velocity();
    const double gam = st.pc.gamma_tf() * st.pressure_scale;
    double a = 0.0, hess = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < st.grid.size(); ++i) {
        const double r = st.grid.r[i];
        const double vol = st.grid.vol[i];
        a += vol * st.rho[i] * g_R_prime(r, wp) * u[i];
        hess += vol * st.rho[i] * g_R_double_prime(r, wp) * u[i] * u[i];
        r2 += vol * std::pow(st.rho[i], 5.0 / 3.0) * laplacian_g_R(r, wp);
    }
    v.a_boundary = a;
    v.hessian_drive = hess;
    v.r2 = -(gam / 5.0) * r2;
    return v;
}

// ---------------------------------------------------------------------------
// Energy accounting and scalar bounds
// ---------------------------------------------------------------------------

struct EnergyBreakdown {
    double kinetic = 0.0;     // bulk kinetic energy (phase-space or fluid)
    double internal = 0.0;    // TF internal energy (fluid runs only)
    double attraction = 0.0;  // -Z * integral rho / r
    double repulsion = 0.0;   // D[rho]
    double total = 0.0;
};

inline EnergyBreakdown vlasov_energy(const VlasovState& st, const RadialDensity& d,
                                     const FieldSnapshot& field) {
    EnergyBreakdown e;
    e.kinetic = st.kinetic_energy();
    e.internal = 0.0;
    e.attraction = nuclear_attraction_energy(d, st.Z());
    e.repulsion = coulomb_energy(d, field);
    e.total = e.kinetic + e.internal + e.attraction + e.repulsion;
    return e;
}

inline EnergyBreakdown fluid_energy_breakdown(const FluidState& st) {
    HydroEnergy h = hydro_energy(st);
    EnergyBreakdown e;
    e.kinetic = h.kinetic;
    e.internal = h.internal;
    e.attraction = h.attraction;
    e.repulsion = h.repulsion;
    e.total = h.total;
    return e;
}

// Minimal-kinetic-energy principle: the positive part of the energy must
// dominate the value it takes on the equal-density isotropic filled state.
// margin = (kinetic + internal) - (3/10) gamma_TF integral rho^(5/3).
inline double rearrangement_margin(const EnergyBreakdown& e, const RadialDensity& d,
                                   const PhysicalConstants& pc, double pressure_scale = 1.0) {
    const RadialGrid& g = *d.grid;
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        s += g.vol[i] * std::pow(std::max(d.rho[i], 0.0), 5.0 / 3.0);
    return e.kinetic + e.internal - pressure_scale * 0.3 * pc.gamma_tf() * s;
}

// Trajectory-uniform bound on the positive energies:
//   kinetic + internal + repulsion <= 2 (E p(0) - (alpha/2) (2Z)^(7/3)).
inline double uniform_bound_rhs(double e0, double Z, double alpha) {
    return 2.0 * (e0 - 0.5 * alpha * std::pow(2.0 * Z, 7.0 / 3.0));
}

// ---------------------------------------------------------------------------
// Records and time-averaged certificate
// ---------------------------------------------------------------------------

struct DiagnosticsRecord {
    double t = 0.0;
    double n_total = 0.0;
    double n_ball = 0.0;
    double escaped = 0.0;
    EnergyBreakdown energy;
    double max_f = std::numeric_limits<double>::quiet_NaN();
    double rearrangement = 0.0;           // margin, should be >= -tol
    double uniform_lhs = 0.0;             // kinetic + internal + repulsion
    std::vector<VirialLedger> ladder;     // one entry per configured R
    std::vector<double> avg_m_r;          // running Cesaro average per R
    std::vector<double> cert_margin;      // Z*avg - avg^2/2 per R
};

// Running trapezoid Cesaro averages of a fixed-width vector series.
class TimeAverager {
  public:
    explicit TimeAverager(std::size_t channels = 0) : integral_(channels, 0.0) {}

    void add(double t, const std::vector<double>& v) {
        if (v.size() != integral_.size()) throw std::invalid_argument("TimeAverager: width");
        if (!first_) {
            const double h = t - t_prev_;
            if (h < 0.0) throw std::invalid_argument("TimeAverager: time went backwards");
            for (std::size_t i = 0; i < v.size(); ++i)
                integral_[i] += 0.5 * h * (v[i] + prev_[i]);
        } else {
            t0_ = t;
            first_ = false;
        }
        prev_ = v;
        t_prev_ = t;
    }

    double elapsed() const { return first_ ? 0.0 : t_prev_ - t0_; }

    // Cesaro average of channel i over [t0, t_last]; falls back to the last
    // sample when no time has elapsed yet.
    double average(std::size_t i) const {
        const double T = elapsed();
        if (T <= 0.0) return prev_.empty() ? 0.0 : prev_[i];
        return integral_[i] / T;
    }

  private:
    std::vector<double> integral_, prev_;
    double t0_ = 0.0, t_prev_ = 0.0;
    bool first_ = true;
};

struct CertificateVerdict {
    double R = 0.0;
    double avg_m_r = 0.0;        // <M_R> over the full run
    double margin = 0.0;         // Z<M> - <M>^2/2 at final time
    double decay_final = 0.0;    // decay(T) at final time
    double c_fit = 0.0;          // calibrated prefactor of decay(T)
    double worst_margin_slack = 0.0; // min over T>=T_min of margin(T)+decay(T)
    double max_avg_m_r = 0.0;    // max over T>=T_min of <M_R>_T
    bool margin_ok = false;      // (i) Z<M>-<M>^2/2 >= -decay(T) for T >= T_min
    bool bound_2z_ok = false;    // (ii) <M_R>_T <= 2Z + tol for T >= T_min
    bool a_term_ok = false;      // (iii) |A(T)| <= decay(T) at final T
    bool ball_ok = false;        // (iv) <N(t,B)> <= (1+(D/R)^2)(2Z + tol)
    bool ok = false;
};

// Evaluates the time-averaged certificate from a recorded series.
// a_series holds a_boundary(t) per record for this R; m_series the raw M_R.
struct CertificateInput {
    double Z = 1.0;
    double R = 0.0;
    double D = 0.0;       // ball radius for (iv)
    double n0 = 0.0;      // initial particle number
    double t_min = 10.0;  // averages consulted for T >= t_min
    double tol_rel = 1e-3;
    std::vector<double> t, m_r, a_boundary, n_ball;
};

inline CertificateVerdict evaluate_certificate(const CertificateInput& in) {
    if (in.t.size() < 2) throw std::invalid_argument("certificate: need a time series");
    CertificateVerdict out;
    out.R = in.R;

    double a_max = 0.0;
    for (double a : in.a_boundary) a_max = std::max(a_max, std::abs(a));
    const double sqn = std::sqrt(std::max(in.n0, 1e-300));
    out.c_fit = 2.0 * a_max / (sqn * in.R * in.R);

    TimeAverager avg_m(1), avg_b(1);
    const double tol = in.tol_rel * in.Z;
    bool margin_ok = true, bound_ok = true;
    double worst_slack = std::numeric_limits<double>::infinity();
    double max_avg = 0.0;
    double ball_avg_final = 0.0;
    for (std::size_t s = 0; s < in.t.size(); ++s) {
        avg_m.add(in.t[s], {in.m_r[s]});
        avg_b.add(in.t[s], {in.n_ball[s]});
        const double T = avg_m.elapsed();
        if (T + 1e-12 < in.t_min) continue;
        const double m = avg_m.average(0);
        const double margin = in.Z * m - 0.5 * m * m;
        const double decay = out.c_fit * sqn * in.R * in.R / std::max(T, 1e-300);
        worst_slack = std::min(worst_slack, margin + decay);
        max_avg = std::max(max_avg, m);
        if (margin < -decay - tol) margin_ok = false;
        if (m > 2.0 * in.Z + tol) bound_ok = false;
        if (s + 1 == in.t.size()) {
            out.avg_m_r = m;
            out.margin = margin;
            out.decay_final = decay;
            ball_avg_final = avg_b.average(0);
        }
    }
    out.worst_margin_slack = worst_slack;
    out.max_avg_m_r = max_avg;
    out.margin_ok = margin_ok;
    out.bound_2z_ok = bound_ok;

    // (iii) |A(T)| = |a(T) - a(0)|/T against the fitted decay at final time.
    const double T_final = in.t.back() - in.t.front();
    const double A = (in.a_boundary.back() - in.a_boundary.front()) / std::max(T_final, 1e-300);
    out.a_term_ok = std::abs(A) <= out.c_fit * sqn * in.R * in.R / T_final + 1e-12;

    // (iv) ball count through the moment bound.
    const double geom = 1.0 + (in.D / in.R) * (in.D / in.R);
    out.ball_ok = ball_avg_final <= geom * (2.0 * in.Z + tol);

    out.ok = out.margin_ok && out.bound_2z_ok && out.a_term_ok && out.ball_ok;
    return out;
}

} // namespace vpatom
