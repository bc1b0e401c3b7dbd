#pragma once

// Scenario configuration (JSON, versioned schema), built-in presets, and
// initial-state builders for both solvers.
//
// Initial profiles:
//   tf-equilibrium : self-consistent minimizer of the TF energy on the run's
//                    own grid (so the discrete state starts stationary),
//                    optionally boosted by a uniform radial velocity kick.
//   fermi-ball     : uniform-density ball of given mass and radius with a
//                    smoothed edge.
//   shifted-blob   : small Gaussian packet in (r, w, l), for probe runs.
//
// Kinetic states are filled line by line: at each (radius, angular-momentum)
// line the radial-velocity occupation is a quintic-smoothstep window whose
// half-width reproduces the local Fermi ball, slightly widened and then
// rescaled per radius so the grid density matches the target exactly while
// max f stays strictly below q.

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "vpatom/constants.hpp"
#include "vpatom/radial_grid.hpp"
#include "vpatom/tf_ground_state.hpp"
#include "vpatom/tf_hydro.hpp"
#include "vpatom/vlasov.hpp"

namespace vpatom {

using nlohmann::json;

struct ScenarioError : std::runtime_error {
    explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

struct ProfileSpec {
    std::string type = "tf-equilibrium"; // tf-equilibrium | fermi-ball | shifted-blob
    double n = 1.0;                      // target mass (fermi-ball, shifted-blob)
    double ball_radius = 2.0;            // fermi-ball radius
    double kick_eps = 0.0;               // radial velocity perturbation amplitude
    std::string kick_mode = "uniform";   // uniform: u = eps; dilation: u = eps * r
    double edge_frac = 0.4;              // shell-edge energy width / binding depth |mu|
    double r0 = 5.0, w0 = 0.0, sr = 0.5, sw = 0.2, l0 = 0.5, sl = 0.3; // blob

    double kick_velocity(double r) const {
        return kick_mode == "dilation" ? kick_eps * r : kick_eps;
    }
};

struct VlasovGridSpec {
    std::size_t nr = 256;
    double r_min = 0.3, r_max = 30.0;
    std::size_t nw = 128;
    double w_max = 3.0;
    std::size_t nl = 32;
    double l_max = 1.8;
};

struct FluidGridSpec {
    std::size_t nr = 256;
    double r_min = 0.02, r_max = 40.0;
};

struct ScenarioSpec {
    int schema_version = 1;
    std::string name = "custom";
    std::string solver = "vlasov"; // vlasov | tf-hydro
    double Z = 1.0;
    double q = 2.0;
    ProfileSpec profile;
    VlasovGridSpec vgrid;
    FluidGridSpec fgrid;
    std::string outer_boundary = "wall"; // wall | absorb (vlasov only)
    double t_final = 10.0;
    double record_dt = 0.25;
    double cfl = 0.25;
    double dt_max = 0.0; // 0 = no explicit cap
    std::vector<double> r_ladder{5.0, 10.0, 20.0, 40.0};
    double ball_d = 10.0;
    double pressure_scale = 1.0; // tf-hydro test knob
    double field_scale = 1.0;    // tf-hydro test knob
    unsigned long seed = 0;      // reserved for stochastic profiles; unused by presets
};

// ---------------------------------------------------------------------------
// JSON (de)serialization with strict keys and field-level error messages
// ---------------------------------------------------------------------------

namespace detail {

inline void require_keys(const json& j, const char* where,
                         std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw ScenarioError(std::string(where) + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
void fetch(const json& j, const char* where, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ScenarioError(std::string(where) + "." + key + ": " + e.what());
    }
}

} // namespace detail

inline void to_json(json& j, const ProfileSpec& p) {
    j = json{{"type", p.type},         {"n", p.n},
             {"ball_radius", p.ball_radius}, {"kick_eps", p.kick_eps},
             {"kick_mode", p.kick_mode},     {"edge_frac", p.edge_frac},
             {"r0", p.r0}, {"w0", p.w0}, {"sr", p.sr}, {"sw", p.sw},
             {"l0", p.l0}, {"sl", p.sl}};
}

inline void from_json_checked(const json& j, ProfileSpec& p) {
    detail::require_keys(j, "profile",
                         {"type", "n", "ball_radius", "kick_eps", "kick_mode", "edge_frac",
                          "r0", "w0", "sr", "sw", "l0", "sl"});
    detail::fetch(j, "profile", "type", p.type);
    detail::fetch(j, "profile", "n", p.n);
    detail::fetch(j, "profile", "ball_radius", p.ball_radius);
    detail::fetch(j, "profile", "kick_eps", p.kick_eps);
    detail::fetch(j, "profile", "kick_mode", p.kick_mode);
    if (p.kick_mode != "uniform" && p.kick_mode != "dilation")
        throw ScenarioError("profile.kick_mode: expected uniform | dilation");
    detail::fetch(j, "profile", "edge_frac", p.edge_frac);
    detail::fetch(j, "profile", "r0", p.r0);
    detail::fetch(j, "profile", "w0", p.w0);
    detail::fetch(j, "profile", "sr", p.sr);
    detail::fetch(j, "profile", "sw", p.sw);
    detail::fetch(j, "profile", "l0", p.l0);
    detail::fetch(j, "profile", "sl", p.sl);
    if (p.type != "tf-equilibrium" && p.type != "fermi-ball" && p.type != "shifted-blob")
        throw ScenarioError("profile.type: expected tf-equilibrium | fermi-ball | shifted-blob");
    if (p.n <= 0.0) throw ScenarioError("profile.n: must be positive");
    if (p.ball_radius <= 0.0) throw ScenarioError("profile.ball_radius: must be positive");
    if (!(p.edge_frac > 0.0 && p.edge_frac <= 0.9))
        throw ScenarioError("profile.edge_frac: must lie in (0, 0.9]");
}

inline void to_json(json& j, const VlasovGridSpec& g) {
    j = json{{"nr", g.nr},     {"r_min", g.r_min}, {"r_max", g.r_max}, {"nw", g.nw},
             {"w_max", g.w_max}, {"nl", g.nl},     {"l_max", g.l_max}};
}

inline void from_json_checked(const json& j, VlasovGridSpec& g) {
    detail::require_keys(j, "vlasov_grid", {"nr", "r_min", "r_max", "nw", "w_max", "nl", "l_max"});
    detail::fetch(j, "vlasov_grid", "nr", g.nr);
    detail::fetch(j, "vlasov_grid", "r_min", g.r_min);
    detail::fetch(j, "vlasov_grid", "r_max", g.r_max);
    detail::fetch(j, "vlasov_grid", "nw", g.nw);
    detail::fetch(j, "vlasov_grid", "w_max", g.w_max);
    detail::fetch(j, "vlasov_grid", "nl", g.nl);
    detail::fetch(j, "vlasov_grid", "l_max", g.l_max);
    if (g.nr < 8 || g.nw < 8 || g.nl < 2)
        throw ScenarioError("vlasov_grid: resolutions too small (nr,nw >= 8, nl >= 2)");
    if (!(g.r_min > 0.0 && g.r_max > g.r_min))
        throw ScenarioError("vlasov_grid: need 0 < r_min < r_max");
    if (!(g.w_max > 0.0 && g.l_max > 0.0))
        throw ScenarioError("vlasov_grid: need positive w_max and l_max");
}

inline void to_json(json& j, const FluidGridSpec& g) {
    j = json{{"nr", g.nr}, {"r_min", g.r_min}, {"r_max", g.r_max}};
}

inline void from_json_checked(const json& j, FluidGridSpec& g) {
    detail::require_keys(j, "fluid_grid", {"nr", "r_min", "r_max"});
    detail::fetch(j, "fluid_grid", "nr", g.nr);
    detail::fetch(j, "fluid_grid", "r_min", g.r_min);
    detail::fetch(j, "fluid_grid", "r_max", g.r_max);
    if (g.nr < 8) throw ScenarioError("fluid_grid.nr: must be >= 8");
    if (!(g.r_min > 0.0 && g.r_max > g.r_min))
        throw ScenarioError("fluid_grid: need 0 < r_min < r_max");
}

inline void to_json(json& j, const ScenarioSpec& s) {
    j = json{{"schema_version", s.schema_version},
             {"name", s.name},
             {"solver", s.solver},
             {"Z", s.Z},
             {"q", s.q},
             {"profile", s.profile},
             {"vlasov_grid", s.vgrid},
             {"fluid_grid", s.fgrid},
             {"outer_boundary", s.outer_boundary},
             {"t_final", s.t_final},
             {"record_dt", s.record_dt},
             {"cfl", s.cfl},
             {"dt_max", s.dt_max},
             {"r_ladder", s.r_ladder},
             {"ball_d", s.ball_d},
             {"pressure_scale", s.pressure_scale},
             {"field_scale", s.field_scale},
             {"seed", s.seed}};
}

inline ScenarioSpec scenario_from_json(const json& j) {
    if (!j.is_object()) throw ScenarioError("config root: expected a JSON object");
    detail::require_keys(j, "config",
                         {"schema_version", "name", "solver", "Z", "q", "profile", "vlasov_grid",
                          "fluid_grid", "outer_boundary", "t_final", "record_dt", "cfl", "dt_max",
                          "r_ladder", "ball_d", "pressure_scale", "field_scale", "seed"});
    ScenarioSpec s;
    if (!j.contains("schema_version")) throw ScenarioError("schema_version: missing");
    detail::fetch(j, "config", "schema_version", s.schema_version);
    if (s.schema_version != 1) throw ScenarioError("schema_version: expected 1");
    detail::fetch(j, "config", "name", s.name);
    detail::fetch(j, "config", "solver", s.solver);
    if (s.solver != "vlasov" && s.solver != "tf-hydro")
        throw ScenarioError("solver: expected vlasov | tf-hydro");
    detail::fetch(j, "config", "Z", s.Z);
    if (!(s.Z > 0.0)) throw ScenarioError("Z: must be positive");
    detail::fetch(j, "config", "q", s.q);
    if (!(s.q >= 1.0)) throw ScenarioError("q: must be >= 1");
    if (j.contains("profile")) from_json_checked(j.at("profile"), s.profile);
    if (j.contains("vlasov_grid")) from_json_checked(j.at("vlasov_grid"), s.vgrid);
    if (j.contains("fluid_grid")) from_json_checked(j.at("fluid_grid"), s.fgrid);
    detail::fetch(j, "config", "outer_boundary", s.outer_boundary);
    if (s.outer_boundary != "wall" && s.outer_boundary != "absorb")
        throw ScenarioError("outer_boundary: expected wall | absorb");
    detail::fetch(j, "config", "t_final", s.t_final);
    if (!(s.t_final >= 0.0)) throw ScenarioError("t_final: must be >= 0");
    detail::fetch(j, "config", "record_dt", s.record_dt);
    if (!(s.record_dt > 0.0)) throw ScenarioError("record_dt: must be positive");
    detail::fetch(j, "config", "cfl", s.cfl);
    if (!(s.cfl > 0.0 && s.cfl <= 1.0)) throw ScenarioError("cfl: must be in (0, 1]");
    detail::fetch(j, "config", "dt_max", s.dt_max);
    if (s.dt_max < 0.0) throw ScenarioError("dt_max: must be >= 0 (0 disables the cap)");
    detail::fetch(j, "config", "r_ladder", s.r_ladder);
    if (s.r_ladder.empty()) throw ScenarioError("r_ladder: need at least one radius");
    for (double r : s.r_ladder)
        if (!(r > 0.0)) throw ScenarioError("r_ladder: radii must be positive");
    detail::fetch(j, "config", "ball_d", s.ball_d);
    if (!(s.ball_d > 0.0)) throw ScenarioError("ball_d: must be positive");
    detail::fetch(j, "config", "pressure_scale", s.pressure_scale);
    detail::fetch(j, "config", "field_scale", s.field_scale);
    if (s.pressure_scale < 0.0 || s.field_scale < 0.0)
        throw ScenarioError("pressure_scale/field_scale: must be >= 0");
    detail::fetch(j, "config", "seed", s.seed);
    return s;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

inline std::vector<std::string> preset_names() {
    return {"tf-static", "vlasov-bound", "vlasov-overfilled", "tf-breather"};
}

inline ScenarioSpec scenario_preset(const std::string& name) {
    ScenarioSpec s;
    s.name = name;
    if (name == "tf-static") {
        s.solver = "tf-hydro";
        s.profile.type = "tf-equilibrium";
        s.fgrid = FluidGridSpec{256, 0.02, 40.0};
        s.t_final = 20.0;
        s.record_dt = 0.1;
        s.cfl = 0.4;
    } else if (name == "vlasov-bound") {
        s.solver = "vlasov";
        s.profile.type = "tf-equilibrium";
        // A strongly bound ion: the deep chemical potential keeps the filled
        // shell compactly supported well inside the velocity and angular-
        // momentum grids and leaves room for a soft shell edge the velocity
        // grid can resolve, which keeps long runs quiet.  The box hugs that
        // support: every orbit stays far below the escape energy, so a tight
        // radial wall and a low velocity ceiling cost nothing physically and
        // buy resolution where the shell actually lives.
        s.profile.n = 0.3;
        s.profile.kick_eps = 0.02;
        s.profile.edge_frac = 0.7;
        s.vgrid = VlasovGridSpec{192, 0.35, 6.0, 256, 2.2, 16, 1.0};
        s.outer_boundary = "wall";
        s.t_final = 50.0;
        s.record_dt = 0.25;
        s.cfl = 0.073;
    } else if (name == "vlasov-overfilled") {
        s.solver = "vlasov";
        s.profile.type = "fermi-ball";
        s.profile.n = 6.0;
        s.profile.ball_radius = 2.0;
        s.vgrid = VlasovGridSpec{192, 0.08, 60.0, 128, 6.0, 24, 4.0};
        s.outer_boundary = "absorb";
        s.t_final = 25.0;
        s.record_dt = 0.25;
        s.cfl = 0.25;
    } else if (name == "tf-breather") {
        s.solver = "tf-hydro";
        s.profile.type = "tf-equilibrium";
        s.profile.kick_eps = 0.005;
        s.profile.kick_mode = "dilation";
        s.fgrid = FluidGridSpec{256, 0.02, 40.0};
        s.t_final = 20.0;
        s.record_dt = 0.1;
        s.cfl = 0.4;
    } else {
        throw ScenarioError("unknown preset '" + name + "'");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Smoothstep window helpers (exact cell averages)
// ---------------------------------------------------------------------------

namespace detail {

// Quintic smoothstep and the antiderivative of its clamped extension.
inline double smoothstep5(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

inline double smoothstep5_anti(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return u - 0.5;
    const double u4 = u * u * u * u;
    return u4 * (2.5 + u * (-3.0 + u)); // integral of s^3(10 - 15 s + 6 s^2)
}

} // namespace detail

// ---------------------------------------------------------------------------
// Kinetic-state fill
// ---------------------------------------------------------------------------

struct FillReport {
    double max_f = 0.0;        // peak cell value (q in the saturated interior)
    double mu = 0.0;           // chemical potential selected by the mass solve
    double delta_e = 0.0;      // energy width of the smoothed shell edge
    double filled_mass = 0.0;  // resulting total mass (matches the target)
    double scf_residual = 0.0; // final L1 density mismatch per unit mass
    int scf_iterations = 0;    // self-consistency sweeps performed
};

namespace detail {

// Exact integral of S((mu - e(w)) / de) over [wl, wr], where
// e(w) = a + (w - kick)^2 / 2. The integrand is piecewise polynomial with
// breakpoints where e crosses mu (outer edge) and mu - de (saturation), so
// splitting there and applying Gauss-Legendre on each smooth piece is exact.
inline double shell_cell_integral(double wl, double wr, double kick, double a, double mu,
                                  double de) {
    static const auto gl = gauss_legendre(6, 0.0, 1.0);
    const double top = mu - a; // (w - kick)^2 / 2 at the outer edge
    if (top <= 0.0) return 0.0;
    const double r1 = std::sqrt(2.0 * top);
    const double r0 = top > de ? std::sqrt(2.0 * (top - de)) : -1.0;

    double pts[6] = {wl, wr, kick - r1, kick + r1, kick - r0, kick + r0};
    std::size_t np = r0 >= 0.0 ? 6 : 4;
    std::sort(pts, pts + np);
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < np; ++p) {
        const double lo = std::max(pts[p], wl), hi = std::min(pts[p + 1], wr);
        if (hi <= lo) continue;
        const double mid = 0.5 * (lo + hi), u = mid - kick;
        if (std::abs(u) >= r1) continue; // outside the shell
        if (r0 >= 0.0 && std::abs(u) <= r0) {
            total += hi - lo; // saturated interior, S = 1
            continue;
        }
        double piece = 0.0;
        for (std::size_t gq = 0; gq < gl.x.size(); ++gq) {
            const double w = lo + (hi - lo) * gl.x[gq];
            const double arg = (top - 0.5 * (w - kick) * (w - kick)) / de;
            piece += gl.w[gq] * smoothstep5(arg);
        }
        total += piece * (hi - lo);
    }
    return total;
}

} // namespace detail

// Fills `st` with the Pauli-saturated shell
//     f(r, w, l) = q * S((mu - e) / delta_e),
//     e = (w - kick(r))^2 / 2 + l^2 / (2 r^2) + U(r).
// Because f depends on the phase-space point only through the orbital energy
// (and the conserved l), any such shell is a steady state of the transport in
// its own mean field, so the fill iterates U to self-consistency: solve the
// field of the current density, re-pick mu so the mass matches the target,
// rebuild f, and blend. The edge width delta_e = edge_frac * |mu_target| is a
// fixed physical scale (not grid-tied): wide enough to be resolved by the
// velocity grid, narrow enough to keep the shell compactly supported.
inline FillReport fill_energy_shell(VlasovState& st, const std::vector<double>& target,
                                    double mu_target, const ProfileSpec& prof) {
    const PhaseGrid& g = st.grid();
    const PhysicalConstants& pc = st.constants();
    const std::size_t nr = g.nr(), nw = g.nw, nl = g.nl();
    if (target.size() != nr) throw ScenarioError("fill: density size mismatch");
    if (!(mu_target < 0.0))
        throw ScenarioError("fill: energy shell needs a bound target (mu < 0)");

    RadialDensity d;
    d.grid = &g.r;
    d.rho = target;
    const double n_target = d.total_charge();
    if (!(n_target > 0.0)) throw ScenarioError("fill: target density has no mass");
    const double de = std::max(prof.edge_frac * -mu_target, 1e-12);

    std::vector<double> u_pot(nr);
    double u_min = 0.0;

    // Shell mass in the current potential; optionally writes f into `st`.
    auto apply = [&](double mu, bool write) {
        double mass = 0.0, line_max = 0.0;
        for (std::size_t k = 0; k < nl; ++k) {
            const double l = g.l_nodes[k];
            double col = 0.0;
            for (std::size_t i = 0; i < nr; ++i) {
                const double r = g.r.r[i];
                const double a = u_pot[i] + 0.5 * l * l / (r * r);
                const double kick = prof.kick_velocity(r);
                const double top = mu - a;
                if (top <= 0.0) continue;
                const double r1 = std::sqrt(2.0 * top);
                const std::size_t j_lo = static_cast<std::size_t>(std::max(
                    0.0, std::floor((kick - r1 - g.w_edges[0]) / g.dw)));
                const std::size_t j_hi = static_cast<std::size_t>(std::max(
                    0.0, std::min(static_cast<double>(nw),
                                  std::ceil((kick + r1 - g.w_edges[0]) / g.dw))));
                double line = 0.0;
                for (std::size_t j = j_lo; j < j_hi; ++j) {
                    const double cell = detail::shell_cell_integral(
                        g.w_edges[j], g.w_edges[j + 1], kick, a, mu, de);
                    const double f = pc.q * cell / g.dw;
                    if (write) st.at(k, j, i) = f;
                    line_max = std::max(line_max, f);
                    line += cell;
                }
                col += g.r.dr[i] * line;
            }
            mass += g.l_weights[k] * col;
        }
        mass *= pc.q / PhysicalConstants::pi;
        return std::pair<double, double>(mass, line_max);
    };

    // Mass-matching mu in the current potential: bracketed secant (Illinois),
    // which needs ~10 mass evaluations instead of ~50 bisection steps.
    auto solve_mu = [&]() {
        const double hi_cap = -1e-3 * -mu_target;
        double lo = u_min, hi = hi_cap;
        double flo = apply(lo, false).first - n_target;
        double fhi = apply(hi, false).first - n_target;
        if (fhi < 0.0)
            throw ScenarioError("fill: shell cannot reach the target mass while staying "
                                "bound; lower profile.n or enlarge l_max/w_max");
        if (flo >= 0.0) return lo;
        double side = 0.0;
        for (int it = 0; it < 80; ++it) {
            const double mid = (lo * fhi - hi * flo) / (fhi - flo);
            const double fm = apply(mid, false).first - n_target;
            if (std::abs(fm) <= 1e-12 * n_target) return mid;
            if (fm < 0.0) {
                lo = mid;
                flo = fm;
                if (side < 0.0) fhi *= 0.5;
                side = -1.0;
            } else {
                hi = mid;
                fhi = fm;
                if (side > 0.0) flo *= 0.5;
                side = 1.0;
            }
            if (hi - lo <= 1e-15 * (std::abs(hi) + std::abs(lo) + 1.0)) break;
        }
        return 0.5 * (lo + hi);
    };

    // Self-consistency sweep: field of rho_cur -> mu -> f -> density(f).
    std::vector<double> rho_cur = target;
    FillReport rep;
    rep.delta_e = de;
    const double blend = 0.5;
    double mu = mu_target;
    for (int sweep = 0; sweep < 80; ++sweep) {
        d.rho = rho_cur;
        const FieldSnapshot field = solve_field(d, st.Z());
        u_min = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < nr; ++i) {
            u_pot[i] = -st.Z() / g.r.r[i] + field.v_mf[i];
            u_min = std::min(u_min, u_pot[i]);
        }
        mu = solve_mu();
        std::fill(st.data().begin(), st.data().end(), 0.0);
        rep.max_f = apply(mu, true).second;
        rep.scf_iterations = sweep + 1;

        const RadialDensity rho_f = st.density();
        double resid = 0.0;
        for (std::size_t i = 0; i < nr; ++i)
            resid += std::abs(rho_f.rho[i] - rho_cur[i]) * g.r.vol[i];
        rep.scf_residual = resid / n_target;
        if (rep.scf_residual < 1e-10) break;
        for (std::size_t i = 0; i < nr; ++i)
            rho_cur[i] += blend * (rho_f.rho[i] - rho_cur[i]);
    }

    rep.mu = mu;
    if (rep.max_f > pc.q * (1.0 + 1e-12))
        throw ScenarioError("fill: exclusion bound violated (max f = " +
                            std::to_string(rep.max_f) + ")");
    rep.filled_mass = st.total_mass();
    return rep;
}

// Fills `st` so that its grid density equals `target` exactly: per (l, r)
// line an exclusion-saturated smoothstep window in w, centered at the kick
// velocity, with half-width sqrt(s^2 - l^2/r^2) where the momentum radius s
// is solved per radius to reproduce the target density. Amplitude stays at
// the exclusion ceiling q, so the window widens (never overfills) to absorb
// soft-edge and quadrature losses. Unlike the energy shell this matches an
// arbitrary density profile, at the cost of not being a steady state; it is
// the natural builder for deliberately out-of-equilibrium initial data.
inline FillReport fill_velocity_window(VlasovState& st, const std::vector<double>& target,
                                       const ProfileSpec& prof) {
    const PhaseGrid& g = st.grid();
    const PhysicalConstants& pc = st.constants();
    const std::size_t nr = g.nr(), nw = g.nw, nl = g.nl();
    if (target.size() != nr) throw ScenarioError("fill: density size mismatch");

    const double delta = 1.5 * g.dw; // velocity-cell-scale soft edge
    FillReport rep;
    rep.delta_e = delta;

    const double meas = g.dw / (4.0 * PhysicalConstants::pi * PhysicalConstants::pi);
    for (std::size_t i = 0; i < nr; ++i) {
        if (target[i] <= 0.0) continue;
        const double r = g.r.r[i];
        const double kick = prof.kick_velocity(r);

        // Grid density produced by saturated windows of momentum radius s;
        // optionally writes the row. Reuses the shell integrand with
        // a = -h^2/2, mu = 0: its S-edge is then delta wide in velocity at
        // the support boundary |w - kick| = h, and the cell integrals are
        // exact (piecewise polynomial), so the density is smooth in s.
        const auto row_density = [&](double s, bool write) {
            double raw = 0.0;
            for (std::size_t k = 0; k < nl; ++k) {
                const double l = g.l_nodes[k];
                const double h2 = s * s - l * l / (r * r);
                if (h2 <= 1e-20) continue;
                const double h = std::sqrt(h2);
                double line = 0.0;
                for (std::size_t j = 0; j < nw; ++j) {
                    const double cell = detail::shell_cell_integral(
                        g.w_edges[j], g.w_edges[j + 1], kick, -0.5 * h * h, 0.0, delta * h);
                    if (write) {
                        st.at(k, j, i) = pc.q * cell / g.dw;
                        rep.max_f = std::max(rep.max_f, st.at(k, j, i));
                    }
                    line += cell;
                }
                raw += g.l_weights[k] * line;
            }
            return raw * meas / (g.dw * r * r) * pc.q;
        };

        // Window must stay clear of the velocity boundary cells.
        const double s_box = g.w_max - 2.0 * g.dw - delta - std::abs(kick);
        if (!(s_box > 0.0))
            throw ScenarioError("fill: w_max too small for the requested density");

        // Bracket the momentum radius: the ideal-gas inversion is a lower
        // bound up to edge losses, so a short upward expansion suffices.
        double lo = 0.0, f_lo = -target[i];
        double hi = std::min(pc.fermi_momentum(target[i]) + 2.0 * delta, s_box);
        double f_hi = row_density(hi, false) - target[i];
        while (f_hi < 0.0) {
            if (hi >= s_box)
                throw ScenarioError("fill: w_max too small for the requested density");
            lo = hi;
            f_lo = f_hi;
            hi = std::min(2.0 * hi, s_box);
            f_hi = row_density(hi, false) - target[i];
        }

        // Monotone solve for the momentum radius (Illinois false position).
        double s = hi;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            s = (f_hi * lo - f_lo * hi) / (f_hi - f_lo);
            if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
            const double f_s = row_density(s, false) - target[i];
            if (std::abs(f_s) <= 1e-14 * target[i]) break;
            if (f_s > 0.0) {
                hi = s;
                f_hi = f_s;
                f_lo *= 0.5;
            } else {
                lo = s;
                f_lo = f_s;
                f_hi *= 0.5;
            }
        }
        row_density(s, true);
    }
    if (rep.max_f > pc.q * (1.0 + 1e-12))
        throw ScenarioError("fill: exclusion bound violated (max f = " +
                            std::to_string(rep.max_f) + ")");
    rep.filled_mass = st.total_mass();
    return rep;
}

// ---------------------------------------------------------------------------
// Target density profiles and state builders
// ---------------------------------------------------------------------------

inline std::vector<double> smoothed_ball_density(const RadialGrid& grid, double n, double a) {
    const double delta = std::max(3.0 * a * std::log(grid.edge[1] / grid.edge[0]), 1e-3 * a);
    std::vector<double> rho(grid.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        rho[i] = detail::smoothstep5((a + delta - grid.r[i]) / (2.0 * delta));
        mass += grid.vol[i] * rho[i];
    }
    if (mass <= 0.0) throw ScenarioError("fermi-ball: ball lies outside the grid");
    for (double& v : rho) v *= n / mass;
    return rho;
}

inline std::vector<double> target_density(const ScenarioSpec& spec, const RadialGrid& grid,
                                          const PhysicalConstants& pc) {
    if (spec.profile.type == "tf-equilibrium") {
        TFMinimizeResult res =
            minimize_tf_on_grid(grid, spec.Z, pc, 1e-8, 200000, nullptr, spec.profile.n);
        if (!res.converged)
            throw ScenarioError("tf-equilibrium: minimizer failed to converge on this grid");
        return res.rho;
    }
    if (spec.profile.type == "fermi-ball")
        return smoothed_ball_density(grid, spec.profile.n, spec.profile.ball_radius);
    throw ScenarioError("target_density: profile '" + spec.profile.type + "' has no density");
}

inline VlasovState build_vlasov_state(const ScenarioSpec& spec) {
    if (spec.solver != "vlasov") throw ScenarioError("build_vlasov_state: solver mismatch");
    PhysicalConstants pc;
    pc.q = spec.q;
    const VlasovGridSpec& v = spec.vgrid;
    PhaseGrid grid(RadialGrid(v.r_min, v.r_max, v.nr), v.nw, v.w_max, v.nl, v.l_max);
    OuterBoundary ob = spec.outer_boundary == "wall" ? OuterBoundary::wall : OuterBoundary::absorb;
    VlasovState st(std::move(grid), spec.Z, pc, ob);

    if (spec.profile.type == "shifted-blob") {
        const PhaseGrid& g = st.grid();
        const ProfileSpec& p = spec.profile;
        for (std::size_t k = 0; k < g.nl(); ++k) {
            const double gl = std::exp(-std::pow((g.l_nodes[k] - p.l0) / p.sl, 2));
            for (std::size_t j = 0; j < g.nw; ++j) {
                const double gw = std::exp(-std::pow((g.w_centers[j] - p.w0) / p.sw, 2));
                for (std::size_t i = 0; i < g.nr(); ++i) {
                    const double gr = std::exp(-std::pow((g.r.r[i] - p.r0) / p.sr, 2));
                    st.at(k, j, i) = gl * gw * gr;
                }
            }
        }
        const double mass = st.total_mass();
        if (mass <= 0.0) throw ScenarioError("shifted-blob: zero mass on this grid");
        const double scale = p.n / mass;
        for (double& f : st.data()) f *= scale;
        return st;
    }

    if (spec.profile.type == "tf-equilibrium") {
        TFMinimizeResult res = minimize_tf_on_grid(st.grid().r, spec.Z, pc, 1e-8, 200000,
                                                   nullptr, spec.profile.n);
        if (!res.converged)
            throw ScenarioError("tf-equilibrium: minimizer failed to converge on this grid");
        if (!(res.mu < 0.0))
            throw ScenarioError("tf-equilibrium: needs a bound profile (mu < 0); "
                                "lower profile.n below the neutral mass");
        fill_energy_shell(st, res.rho, res.mu, spec.profile);
    } else {
        std::vector<double> rho = target_density(spec, st.grid().r, pc);
        fill_velocity_window(st, rho, spec.profile);
    }

    // The velocity and angular-momentum grids must cover the filled state:
    // the extreme cells have to come out empty or mass will leak from step one.
    const PhaseGrid& g = st.grid();
    double border = 0.0;
    for (std::size_t i = 0; i < g.nr(); ++i)
        for (std::size_t j = 0; j < g.nw; ++j)
            border = std::max(border, st.at(g.nl() - 1, j, i));
    for (std::size_t k = 0; k < g.nl(); ++k)
        for (std::size_t i = 0; i < g.nr(); ++i)
            border = std::max({border, st.at(k, 0, i), st.at(k, g.nw - 1, i)});
    if (border > 1e-12 * pc.q)
        throw ScenarioError("fill: occupied cells touch the grid boundary; "
                            "increase w_max or l_max");
    return st;
}

inline FluidState build_fluid_state(const ScenarioSpec& spec) {
    if (spec.solver != "tf-hydro") throw ScenarioError("build_fluid_state: solver mismatch");
    PhysicalConstants pc;
    pc.q = spec.q;
    RadialGrid grid(spec.fgrid.r_min, spec.fgrid.r_max, spec.fgrid.nr);
    FluidState st(std::move(grid), spec.Z, pc);
    st.pressure_scale = spec.pressure_scale;
    st.field_scale = spec.field_scale;
    st.rho = target_density(spec, st.grid, pc);
    if (spec.profile.kick_eps != 0.0) {
        // u = -d_r phi: uniform kick -> phi = -eps r, dilation -> phi = -eps r^2/2.
        for (std::size_t i = 0; i < st.grid.size(); ++i) {
            const double r = st.grid.r[i];
            st.phi[i] = spec.profile.kick_mode == "dilation"
                            ? -0.5 * spec.profile.kick_eps * r * r
                            : -spec.profile.kick_eps * r;
        }
    }
    return st;
}

} // namespace vpatom
