#pragma once

// Scenario orchestration: advances a solver to t_final, emits one
// DiagnosticsRecord per cadence point, writes the CSV time series and the
// JSON run summary (conservation ledgers, sign ledgers, certificate
// verdicts), and reports aborts (NaN) without losing the partial series.
//
// CSV columns (fixed): t, N, N_in_B, escaped, E_total, T_kin, E_tf_internal,
// E_attr, E_rep, maxf, then for every R in the ladder: M_R<R>, avgM_R<R>,
// cert_margin_R<R>.  Numbers are printed with "%.17g" so identical runs are
// bit-identical.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpatom/diagnostics.hpp"
#include "vpatom/scenario.hpp"

namespace vpatom {

struct RunOptions {
    std::string out_dir;        // empty = keep everything in memory only
    bool write_files = true;
};

struct RunResult {
    ScenarioSpec spec;
    std::vector<DiagnosticsRecord> records;
    json summary;
    bool aborted = false;
    std::string abort_reason;
    std::string csv_path, summary_path;
    long steps = 0;
    double seconds = 0.0;
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_r(double r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", r);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<double>& ladder) {
        if (path.empty()) return;
        out_.open(path, std::ios::binary);
        if (!out_) throw std::runtime_error("cannot open " + path);
        out_ << "t,N,N_in_B,escaped,E_total,T_kin,E_tf_internal,E_attr,E_rep,maxf";
        for (double r : ladder) {
            const std::string tag = fmt_r(r);
            out_ << ",M_R" << tag << ",avgM_R" << tag << ",cert_margin_R" << tag;
        }
        out_ << "\n";
    }

    void row(const DiagnosticsRecord& rec) {
        if (!out_.is_open()) return;
        out_ << fmt17(rec.t) << ',' << fmt17(rec.n_total) << ',' << fmt17(rec.n_ball) << ','
             << fmt17(rec.escaped) << ',' << fmt17(rec.energy.total) << ','
             << fmt17(rec.energy.kinetic) << ',' << fmt17(rec.energy.internal) << ','
             << fmt17(rec.energy.attraction) << ',' << fmt17(rec.energy.repulsion) << ','
             << fmt17(rec.max_f);
        for (std::size_t i = 0; i < rec.ladder.size(); ++i)
            out_ << ',' << fmt17(rec.ladder[i].m_r) << ',' << fmt17(rec.avg_m_r[i]) << ','
                 << fmt17(rec.cert_margin[i]);
        out_ << "\n";
        out_.flush();
    }

  private:
    std::ofstream out_;
};

// Fitted stability constant alpha (ground-state energy per Z^{7/3}); solved
// once per process from the screening equation.
inline double stability_alpha(const PhysicalConstants& pc) {
    static const double slope = [] { return solve_screening().slope; }();
    return (3.0 / 7.0) * slope / tf_length_scale(1.0, pc);
}

} // namespace detail

// Parsed-back CSV series (round-trip checks and external reuse).
struct ParsedSeries {
    std::vector<double> ladder;
    std::vector<DiagnosticsRecord> records;
};

inline ParsedSeries parse_timeseries_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error(path + ": empty file");

    ParsedSeries out;
    {
        std::stringstream hs(header);
        std::string col;
        std::vector<std::string> cols;
        while (std::getline(hs, col, ',')) cols.push_back(col);
        static const char* fixed[] = {"t",       "N",     "N_in_B", "escaped", "E_total",
                                      "T_kin",   "E_tf_internal",   "E_attr",  "E_rep",
                                      "maxf"};
        if (cols.size() < 10) throw std::runtime_error(path + ": malformed header");
        for (std::size_t i = 0; i < 10; ++i)
            if (cols[i] != fixed[i])
                throw std::runtime_error(path + ": unexpected column '" + cols[i] + "'");
        if ((cols.size() - 10) % 3 != 0)
            throw std::runtime_error(path + ": ladder columns not in triples");
        for (std::size_t i = 10; i < cols.size(); i += 3) {
            if (cols[i].rfind("M_R", 0) != 0)
                throw std::runtime_error(path + ": expected M_R column, got '" + cols[i] + "'");
            out.ladder.push_back(std::strtod(cols[i].c_str() + 3, nullptr));
        }
    }

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ls, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
        if (v.size() != 10 + 3 * out.ladder.size())
            throw std::runtime_error(path + ": row width mismatch");
        DiagnosticsRecord rec;
        rec.t = v[0];
        rec.n_total = v[1];
        rec.n_ball = v[2];
        rec.escaped = v[3];
        rec.energy.total = v[4];
        rec.energy.kinetic = v[5];
        rec.energy.internal = v[6];
        rec.energy.attraction = v[7];
        rec.energy.repulsion = v[8];
        rec.max_f = v[9];
        for (std::size_t i = 0; i < out.ladder.size(); ++i) {
            VirialLedger l;
            l.R = out.ladder[i];
            l.m_r = v[10 + 3 * i];
            rec.ladder.push_back(l);
            rec.avg_m_r.push_back(v[11 + 3 * i]);
            rec.cert_margin.push_back(v[12 + 3 * i]);
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared record assembly
// ---------------------------------------------------------------------------

namespace detail {

struct RecordContext {
    const ScenarioSpec* spec = nullptr;
    PhysicalConstants pc;
    std::vector<RepulsionKernelTable> tables;
    TimeAverager m_avg;

    explicit RecordContext(const ScenarioSpec& s, const RadialGrid& grid) : spec(&s) {
        pc.q = s.q;
        for (double r : s.r_ladder) tables.emplace_back(grid, r);
        m_avg = TimeAverager(s.r_ladder.size());
    }

    void finish(DiagnosticsRecord& rec, const RadialDensity& d) {
        rec.n_total = d.total_charge();
        rec.n_ball = particle_count(d, spec->ball_d);
        rec.uniform_lhs = rec.energy.kinetic + rec.energy.internal + rec.energy.repulsion;
        std::vector<double> ms(rec.ladder.size());
        for (std::size_t i = 0; i < rec.ladder.size(); ++i) ms[i] = rec.ladder[i].m_r;
        m_avg.add(rec.t, ms);
        rec.avg_m_r.resize(ms.size());
        rec.cert_margin.resize(ms.size());
        for (std::size_t i = 0; i < ms.size(); ++i) {
            const double m = m_avg.average(i);
            rec.avg_m_r[i] = m;
            rec.cert_margin[i] = spec->Z * m - 0.5 * m * m;
        }
    }
};

inline DiagnosticsRecord make_record(VlasovState& st, RecordContext& ctx) {
    DiagnosticsRecord rec;
    rec.t = st.time();
    RadialDensity d = st.density();
    FieldSnapshot field = solve_field(d, st.Z());
    rec.energy = vlasov_energy(st, d, field);
    rec.max_f = st.max_f();
    rec.escaped = st.escaped() + st.leaked_w();
    rec.rearrangement = rearrangement_margin(rec.energy, d, ctx.pc, 1.0);
    for (const RepulsionKernelTable& table : ctx.tables)
        rec.ladder.push_back(vlasov_virial(st, d, table));
    ctx.finish(rec, d);
    return rec;
}

inline DiagnosticsRecord make_record(FluidState& st, RecordContext& ctx) {
    DiagnosticsRecord rec;
    rec.t = st.t;
    RadialDensity d = st.density();
    rec.energy = fluid_energy_breakdown(st);
    rec.max_f = std::numeric_limits<double>::quiet_NaN();
    rec.escaped = st.escaped;
    rec.rearrangement = rearrangement_margin(rec.energy, d, st.pc, st.pressure_scale);
    for (const RepulsionKernelTable& table : ctx.tables)
        rec.ladder.push_back(fluid_virial(st, d, table));
    ctx.finish(rec, d);
    return rec;
}

inline bool record_finite(const DiagnosticsRecord& r) {
    return std::isfinite(r.n_total) && std::isfinite(r.energy.total) &&
           std::isfinite(r.escaped);
}

inline json ledger_json(const VirialLedger& v) {
    return json{{"R", v.R},
                {"m_r", v.m_r},
                {"a_boundary", v.a_boundary},
                {"b_term", v.b_term},
                {"hessian_drive", v.hessian_drive},
                {"r2", v.r2},
                {"r3", v.r3},
                {"r4", v.r4},
                {"c_attract", v.c_attract},
                {"c_repulse", v.c_repulse},
                {"half_m2", v.half_m2}};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Main entry
// ---------------------------------------------------------------------------

inline RunResult run_scenario(const ScenarioSpec& spec, const RunOptions& opts = {}) {
    const auto wall0 = std::chrono::steady_clock::now();
    RunResult res;
    res.spec = spec;

    const bool kinetic = spec.solver == "vlasov";
    std::unique_ptr<VlasovState> vs;
    std::unique_ptr<FluidState> fs;
    const RadialGrid* rgrid = nullptr;
    if (kinetic) {
        vs = std::make_unique<VlasovState>(build_vlasov_state(spec));
        rgrid = &vs->grid().r;
    } else {
        fs = std::make_unique<FluidState>(build_fluid_state(spec));
        rgrid = &fs->grid;
    }
    detail::RecordContext ctx(spec, *rgrid);

    std::string csv_path;
    if (opts.write_files && !opts.out_dir.empty()) {
        std::filesystem::create_directories(opts.out_dir);
        csv_path = opts.out_dir + "/timeseries.csv";
        res.csv_path = csv_path;
        res.summary_path = opts.out_dir + "/summary.json";
    }
    detail::CsvWriter csv(csv_path, spec.r_ladder);

    auto current_time = [&]() { return kinetic ? vs->time() : fs->t; };
    auto emit = [&]() {
        DiagnosticsRecord rec = kinetic ? detail::make_record(*vs, ctx)
                                        : detail::make_record(*fs, ctx);
        csv.row(rec);
        res.records.push_back(std::move(rec));
        return detail::record_finite(res.records.back());
    };

    if (!emit()) {
        res.aborted = true;
        res.abort_reason = "initial state not finite";
    }

    const double eps_t = 1e-9 * std::max(1.0, spec.record_dt);
    double next_record = spec.record_dt;
    while (!res.aborted && spec.t_final - current_time() > eps_t) {
        if (next_record - current_time() < eps_t) {
            next_record += spec.record_dt;
            continue;
        }
        // For the kinetic solver the density snapshot used for step-size
        // control doubles as the first half-kick field of the step.
        std::optional<FieldSnapshot> f0;
        double dt;
        if (kinetic) {
            f0 = vs->solve_field();
            dt = vs->admissible_dt(*f0, spec.cfl);
        } else {
            dt = fs->admissible_dt(spec.cfl);
        }
        dt = std::min(dt, std::min(next_record, spec.t_final) - current_time());
        if (spec.dt_max > 0.0) dt = std::min(dt, spec.dt_max);
        if (!(dt > 0.0) || !std::isfinite(dt)) {
            res.aborted = true;
            res.abort_reason = "non-positive or non-finite time step";
            break;
        }
        if (kinetic)
            vs->step(dt, &*f0);
        else
            fs->step(dt);
        ++res.steps;
        const double t = current_time();
        if (next_record - t < eps_t || spec.t_final - t < eps_t) {
            if (!emit()) {
                res.aborted = true;
                res.abort_reason = "state became non-finite at t = " + detail::fmt17(t);
            }
            if (next_record - t < eps_t) next_record += spec.record_dt;
        }
    }

    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

    // ---------------- summary -------------------------------------------
    const std::vector<DiagnosticsRecord>& recs = res.records;
    const DiagnosticsRecord& first = recs.front();
    const DiagnosticsRecord& last = recs.back();
    const double n0 = first.n_total;
    const double e0 = first.energy.total;
    const double alpha = detail::stability_alpha(ctx.pc);

    double mass_drift = 0.0, energy_drift = 0.0, min_rearr = std::numeric_limits<double>::max();
    double max_uniform_excess = -std::numeric_limits<double>::max();
    double max_b = -std::numeric_limits<double>::max(), max_r2 = -std::numeric_limits<double>::max();
    double min_rep_slack = std::numeric_limits<double>::max();
    bool escaped_monotone = true;
    const double u_rhs = uniform_bound_rhs(e0, spec.Z, alpha);
    for (std::size_t s = 0; s < recs.size(); ++s) {
        const DiagnosticsRecord& r = recs[s];
        mass_drift = std::max(mass_drift,
                              std::abs(r.n_total + r.escaped - n0) / std::max(n0, 1e-300));
        energy_drift = std::max(energy_drift, std::abs(r.energy.total - e0) /
                                                  std::max(std::abs(e0), 1e-300));
        min_rearr = std::min(min_rearr, r.rearrangement);
        max_uniform_excess = std::max(max_uniform_excess, r.uniform_lhs - u_rhs);
        for (const VirialLedger& l : r.ladder) {
            max_b = std::max(max_b, l.b_term);
            max_r2 = std::max(max_r2, l.r2);
            min_rep_slack = std::min(min_rep_slack, l.c_repulse - l.half_m2);
        }
        if (s > 0 && r.escaped < recs[s - 1].escaped - 1e-12 * std::max(1.0, n0))
            escaped_monotone = false;
    }

    json certs = json::array();
    const bool cert_evaluable = recs.size() >= 2 && last.t >= 10.0 - 1e-9;
    for (std::size_t i = 0; i < spec.r_ladder.size(); ++i) {
        json jc;
        jc["R"] = spec.r_ladder[i];
        jc["evaluated"] = cert_evaluable;
        if (cert_evaluable) {
            CertificateInput in;
            in.Z = spec.Z;
            in.R = spec.r_ladder[i];
            in.D = spec.ball_d;
            in.n0 = n0;
            for (const DiagnosticsRecord& r : recs) {
                in.t.push_back(r.t);
                in.m_r.push_back(r.ladder[i].m_r);
                in.a_boundary.push_back(r.ladder[i].a_boundary);
                in.n_ball.push_back(r.n_ball);
            }
            CertificateVerdict v = evaluate_certificate(in);
            jc["avg_m_r"] = v.avg_m_r;
            jc["margin"] = v.margin;
            jc["decay_final"] = v.decay_final;
            jc["c_fit"] = v.c_fit;
            jc["worst_margin_slack"] = v.worst_margin_slack;
            jc["max_avg_m_r"] = v.max_avg_m_r;
            jc["margin_ok"] = v.margin_ok;
            jc["bound_2z_ok"] = v.bound_2z_ok;
            jc["a_term_ok"] = v.a_term_ok;
            jc["ball_ok"] = v.ball_ok;
            jc["ok"] = v.ok;
        }
        certs.push_back(jc);
    }

    json a_series = json::array();
    for (std::size_t i = 0; i < spec.r_ladder.size(); ++i) {
        json entry;
        entry["R"] = spec.r_ladder[i];
        json ts = json::array(), as = json::array();
        for (const DiagnosticsRecord& r : recs) {
            ts.push_back(r.t);
            as.push_back(r.ladder[i].a_boundary);
        }
        entry["t"] = ts;
        entry["a_boundary"] = as;
        a_series.push_back(entry);
    }

    json summary;
    summary["schema_version"] = 1;
    summary["scenario"] = spec;
    summary["aborted"] = res.aborted;
    if (res.aborted) summary["abort_reason"] = res.abort_reason;
    summary["constants"] = {{"q", ctx.pc.q},
                            {"gamma_tf", ctx.pc.gamma_tf()},
                            {"alpha", alpha}};
    summary["initial"] = {{"n", n0},
                          {"e_total", e0},
                          {"kinetic", first.energy.kinetic},
                          {"internal", first.energy.internal},
                          {"attraction", first.energy.attraction},
                          {"repulsion", first.energy.repulsion},
                          {"ladder", [&] {
                               json a = json::array();
                               for (const VirialLedger& l : first.ladder)
                                   a.push_back(detail::ledger_json(l));
                               return a;
                           }()}};
    summary["final"] = {{"t", last.t},
                        {"n", last.n_total},
                        {"n_ball", last.n_ball},
                        {"escaped", last.escaped},
                        {"e_total", last.energy.total},
                        {"max_f", last.max_f},
                        {"ladder", [&] {
                             json a = json::array();
                             for (const VirialLedger& l : last.ladder)
                                 a.push_back(detail::ledger_json(l));
                             return a;
                         }()}};
    summary["conservation"] = {{"mass_drift_rel", mass_drift},
                               {"energy_drift_rel", energy_drift},
                               {"escaped_monotone", escaped_monotone}};
    if (kinetic)
        summary["conservation"]["leaked_w"] = vs->leaked_w();
    summary["rearrangement"] = {{"min_margin", min_rearr}};
    summary["uniform_bound"] = {{"rhs", u_rhs},
                                {"max_excess", max_uniform_excess},
                                {"ok", max_uniform_excess <= 1e-9 * std::abs(u_rhs)}};
    summary["sign_ledger"] = {{"max_b_term", max_b},
                              {"max_r2", max_r2},
                              {"min_repulse_slack", min_rep_slack}};
    summary["certificates"] = certs;
    summary["a_term"] = a_series;
    if (!kinetic)
        summary["gauge_note"] = "velocity potential reported up to a constant; "
                                "exports subtract phi(r_max)";
    summary["timing"] = {{"steps", res.steps}, {"seconds", res.seconds}};
    res.summary = summary;

    if (opts.write_files && !opts.out_dir.empty()) {
        std::ofstream out(res.summary_path);
        out << summary.dump(2) << "\n";
    }
    return res;
}

// Returns a copy of the scenario with every spatial/velocity resolution
// multiplied by `factor` (quadrature order in the angular momentum direction
// is left alone; it is already converged at the base setting).
inline ScenarioSpec refine_scenario(const ScenarioSpec& spec, int factor) {
    ScenarioSpec r = spec;
    r.name += "-x" + std::to_string(factor);
    r.vgrid.nr *= static_cast<std::size_t>(factor);
    r.vgrid.nw *= static_cast<std::size_t>(factor);
    r.fgrid.nr *= static_cast<std::size_t>(factor);
    return r;
}

// In-memory refinement study: rerun the scenario at 1x, 2x, 4x, ... resolution
// and report the conservation drifts together with observed convergence orders
// (log2 ratio of successive energy drifts).
inline json convergence_study(const ScenarioSpec& spec, int levels,
                              const RunOptions& base_opts = {}) {
    if (levels < 1) throw ScenarioError("convergence_study: levels must be >= 1");
    json rows = json::array();
    std::vector<double> energy_drifts;
    for (int lvl = 0, factor = 1; lvl < levels; ++lvl, factor *= 2) {
        const ScenarioSpec refined = refine_scenario(spec, factor);
        RunResult res = run_scenario(refined, base_opts);
        if (res.aborted)
            throw std::runtime_error("convergence_study: run aborted at factor " +
                                     std::to_string(factor) + ": " + res.abort_reason);
        const json& c = res.summary.at("conservation");
        const double ed = c.at("energy_drift_rel").get<double>();
        energy_drifts.push_back(ed);
        rows.push_back(json{{"factor", factor},
                            {"mass_drift_rel", c.at("mass_drift_rel").get<double>()},
                            {"energy_drift_rel", ed},
                            {"final_energy", res.records.back().energy.total},
                            {"steps", res.steps},
                            {"seconds", res.seconds}});
    }
    json orders = json::array();
    for (std::size_t i = 1; i < energy_drifts.size(); ++i) {
        const double a = energy_drifts[i - 1], b = energy_drifts[i];
        if (a > 0.0 && b > 0.0) orders.push_back(std::log2(a / b));
        else orders.push_back(nullptr);
    }
    return json{{"scenario", spec.name},
                {"t_final", spec.t_final},
                {"levels", rows},
                {"observed_orders", orders}};
}

} // namespace vpatom
