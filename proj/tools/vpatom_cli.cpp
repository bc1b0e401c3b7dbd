// vpatom: radial Vlasov-Poisson / Thomas-Fermi atom simulator.
//
// Subcommands:
//   run                  execute scenarios (presets or JSON configs)
//   verify-inequalities  Monte-Carlo / quadrature sweeps of the kernel bounds
//   tf-ground-state      solve the TF atom for one or more Z
//   alpha-n              optimize the point-configuration ratio alpha_N
//   converge             rerun a scenario at doubled resolutions
//
// Exit codes: 0 success, 1 property violation, 2 bad config/usage, 3 NaN abort.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "CLI11.hpp"

#include "vpatom/alpha_n.hpp"
#include "vpatom/runner.hpp"
#include "vpatom/tf_ground_state.hpp"
#include "vpatom/weights.hpp"

namespace {

using vpatom::json;

std::string output_root(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("VPATOM_OUTPUT_ROOT")) return env;
    return "runs";
}

vpatom::ScenarioSpec load_spec(const std::string& source) {
    for (const std::string& p : vpatom::preset_names())
        if (source == p) return vpatom::scenario_preset(source);
    std::ifstream in(source);
    if (!in) throw vpatom::ScenarioError("cannot open config file '" + source + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw vpatom::ScenarioError(source + ": invalid JSON: " + e.what());
    }
    return vpatom::scenario_from_json(j);
}

int cmd_run(const std::vector<std::string>& sources, const std::string& out_flag,
            double t_final, double record_dt, unsigned jobs) {
    std::vector<vpatom::ScenarioSpec> specs;
    for (const std::string& s : sources) {
        vpatom::ScenarioSpec spec = load_spec(s);
        if (t_final >= 0.0) spec.t_final = t_final;
        if (record_dt > 0.0) spec.record_dt = record_dt;
        specs.push_back(spec);
    }
    const std::string root = output_root(out_flag);
    std::vector<vpatom::RunResult> results(specs.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) return;
            vpatom::RunOptions opts;
            opts.out_dir = root + "/" + specs[i].name;
            results[i] = vpatom::run_scenario(specs[i], opts);
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, specs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    bool any_abort = false;
    for (const vpatom::RunResult& r : results) {
        if (r.aborted) {
            any_abort = true;
            std::cout << r.spec.name << ": ABORTED (" << r.abort_reason << "), partial series in "
                      << r.csv_path << "\n";
            continue;
        }
        const json& c = r.summary.at("conservation");
        std::size_t certs_ok = 0, certs_total = 0;
        for (const json& jc : r.summary.at("certificates")) {
            if (!jc.at("evaluated").get<bool>()) continue;
            ++certs_total;
            if (jc.at("ok").get<bool>()) ++certs_ok;
        }
        std::cout << r.spec.name << ": t=" << r.records.back().t << " steps=" << r.steps
                  << " mass_drift=" << c.at("mass_drift_rel").get<double>()
                  << " energy_drift=" << c.at("energy_drift_rel").get<double>()
                  << " certificates=" << certs_ok << "/" << certs_total << " ("
                  << r.seconds << " s) -> " << r.csv_path << "\n";
    }
    return any_abort ? 3 : 0;
}

int cmd_verify(std::size_t pairs, std::size_t grid_n, std::size_t order, std::size_t nu_pairs,
               unsigned long seed, const std::string& csv_path, const std::string& json_path) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto random_point = [&](double radius) {
        // uniform in the ball: direction times radius * u^(1/3)
        std::normal_distribution<double> nd(0.0, 1.0);
        vpatom::Vec3 v{nd(rng), nd(rng), nd(rng)};
        double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if (n == 0.0) n = 1.0;
        const double r = radius * std::cbrt(unit(rng));
        return vpatom::Vec3{v[0] / n * r, v[1] / n * r, v[2] / n * r};
    };

    std::ofstream csv;
    if (!csv_path.empty()) {
        csv.open(csv_path);
        csv << "kind,x,y,lhs,rhs,margin\n";
    }
    auto emit = [&](const char* kind, double x, double y, const vpatom::InequalityMargin& m) {
        if (csv.is_open())
            csv << kind << ',' << x << ',' << y << ',' << m.lhs << ',' << m.rhs << ','
                << m.margin << "\n";
    };

    std::size_t violations = 0;
    double min_ll1 = std::numeric_limits<double>::max();
    for (std::size_t s = 0; s < pairs; ++s) {
        vpatom::Vec3 x = random_point(10.0), y = random_point(10.0);
        vpatom::InequalityMargin m = vpatom::check_ll1(x, y);
        min_ll1 = std::min(min_ll1, m.margin);
        if (!m.ok) ++violations;
        if (s < 1000) emit("pair_field", vpatom::norm(x), vpatom::norm(y), m);
    }

    double min_ll2 = std::numeric_limits<double>::max();
    for (std::size_t i = 1; i <= grid_n; ++i) {
        for (std::size_t j = 1; j <= grid_n; ++j) {
            const double r = 10.0 * static_cast<double>(i) / static_cast<double>(grid_n);
            const double s = 10.0 * static_cast<double>(j) / static_cast<double>(grid_n);
            vpatom::InequalityMargin m = vpatom::check_ll2(r, s, order);
            min_ll2 = std::min(min_ll2, m.margin);
            if (!m.ok) ++violations;
            emit("sphere_kernel", r, s, m);
        }
    }

    double min_nu = std::numeric_limits<double>::max();
    for (int nu = 2; nu <= 5; ++nu) {
        for (std::size_t s = 0; s < nu_pairs; ++s) {
            vpatom::Vec3 x = random_point(10.0), y = random_point(10.0);
            vpatom::InequalityMargin m =
                vpatom::check_nu_inequality(x, y, static_cast<double>(nu));
            min_nu = std::min(min_nu, m.margin);
            if (!m.ok) ++violations;
            if (s < 250) emit(("nu" + std::to_string(nu)).c_str(), vpatom::norm(x),
                              vpatom::norm(y), m);
        }
    }

    json report{{"pairs", pairs},
                {"grid", grid_n},
                {"order", order},
                {"nu_pairs", nu_pairs},
                {"seed", seed},
                {"violations", violations},
                {"min_margin_pair_field", min_ll1},
                {"min_margin_sphere_kernel", min_ll2},
                {"min_margin_nu", min_nu}};
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        out << report.dump(2) << "\n";
    }
    std::cout << report.dump(2) << "\n";
    return violations == 0 ? 0 : 1;
}

int cmd_tf_ground_state(const std::vector<double>& zs, const std::string& csv_dir,
                        const std::string& json_path) {
    vpatom::PhysicalConstants pc;
    vpatom::ScreeningProfile prof = vpatom::solve_screening();
    json rows = json::array();
    std::vector<double> logz, loge;
    for (double Z : zs) {
        vpatom::TFGroundState gs = vpatom::solve_tf_atom(Z, pc, nullptr, &prof);
        json row{{"Z", Z},
                 {"slope", gs.slope},
                 {"energy_ode", gs.energy_ode},
                 {"energy_grid", gs.energy_grid},
                 {"alpha", gs.alpha},
                 {"n_grid", gs.n_grid},
                 {"neutrality_rel", std::abs(gs.n_grid - Z) / Z}};
        rows.push_back(row);
        logz.push_back(std::log(Z));
        loge.push_back(std::log(-gs.energy_grid));
        if (!csv_dir.empty()) {
            std::filesystem::create_directories(csv_dir);
            char name[64];
            std::snprintf(name, sizeof(name), "%s/tf_Z%g.csv", csv_dir.c_str(), Z);
            std::ofstream out(name);
            out << "r,rho,Q,V_MF,K_r\n";
            vpatom::RadialDensity d;
            d.grid = &gs.grid;
            d.rho = gs.rho;
            vpatom::FieldSnapshot f = vpatom::solve_field(d, Z);
            for (std::size_t i = 0; i < gs.grid.size(); ++i)
                out << gs.grid.r[i] << ',' << gs.rho[i] << ',' << f.q_enclosed[i] << ','
                    << f.v_mf[i] << ',' << f.k_r[i] << "\n";
        }
    }
    json report{{"atoms", rows}};
    if (logz.size() >= 2) {
        // least-squares slope of log|E| vs log Z
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(logz.size());
        for (std::size_t i = 0; i < logz.size(); ++i) {
            sx += logz[i];
            sy += loge[i];
            sxx += logz[i] * logz[i];
            sxy += logz[i] * loge[i];
        }
        report["scaling_exponent"] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        out << report.dump(2) << "\n";
    }
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_alpha_n(const std::vector<int>& ns, std::size_t restarts, unsigned long seed,
                const std::string& json_path) {
    json rows = json::array();
    for (int n : ns) {
        vpatom::AlphaNEstimate est =
            vpatom::estimate_alpha_N(static_cast<std::size_t>(n), restarts, seed);
        rows.push_back(json{{"n", est.n},
                            {"value", est.value},
                            {"configuration", est.configuration},
                            {"restarts", est.restarts},
                            {"seed", est.seed}});
    }
    json report{{"alpha_n", rows}};
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        out << report.dump(2) << "\n";
    }
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_converge(const std::string& source, int levels, double t_final) {
    vpatom::ScenarioSpec spec = load_spec(source);
    if (t_final >= 0.0) spec.t_final = t_final;
    json report = vpatom::convergence_study(spec, levels);
    std::cout << report.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"radial Vlasov-Poisson / Thomas-Fermi atom simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "execute scenarios");
    std::vector<std::string> sources;
    std::string out_dir;
    double t_final = -1.0, record_dt = -1.0;
    unsigned jobs = 1;
    run->add_option("scenario", sources,
                    "preset name (tf-static, vlasov-bound, vlasov-overfilled, tf-breather) "
                    "or JSON config path")
        ->required();
    run->add_option("--out", out_dir, "output root (default $VPATOM_OUTPUT_ROOT or ./runs)");
    run->add_option("--t-final", t_final, "override final time");
    run->add_option("--record-dt", record_dt, "override diagnostics cadence");
    run->add_option("--jobs", jobs, "worker threads for multiple scenarios")->default_val(1);

    // verify-inequalities
    auto* verify = app.add_subcommand("verify-inequalities", "kernel inequality sweeps");
    std::size_t pairs = 1000000, grid_n = 50, order = 64, nu_pairs = 100000;
    unsigned long seed = 20260825;
    std::string ineq_csv, ineq_json;
    verify->add_option("--pairs", pairs, "random pairs for the field inequality");
    verify->add_option("--grid", grid_n, "radius grid size for the kernel bound");
    verify->add_option("--order", order, "quadrature order for the kernel bound");
    verify->add_option("--nu-pairs", nu_pairs, "random pairs per nu");
    verify->add_option("--seed", seed, "RNG seed");
    verify->add_option("--csv", ineq_csv, "write sampled rows (kind,x,y,lhs,rhs,margin)");
    verify->add_option("--json", ineq_json, "write the JSON report");

    // tf-ground-state
    auto* tfgs = app.add_subcommand("tf-ground-state", "solve the TF atom");
    std::vector<double> zs{1.0};
    std::string tf_csv_dir, tf_json;
    tfgs->add_option("--Z", zs, "nuclear charges")->expected(-1);
    tfgs->add_option("--csv-dir", tf_csv_dir, "write per-Z profiles (r,rho,Q,V_MF,K_r)");
    tfgs->add_option("--json", tf_json, "write the JSON report");

    // alpha-n
    auto* an = app.add_subcommand("alpha-n", "optimize the configuration ratio");
    std::vector<int> ns{2};
    std::size_t restarts = 64;
    unsigned long an_seed = 20260825;
    std::string an_json;
    an->add_option("--n", ns, "configuration sizes")->expected(-1);
    an->add_option("--restarts", restarts, "optimizer restarts");
    an->add_option("--seed", an_seed, "RNG seed");
    an->add_option("--json", an_json, "write the JSON report");

    // converge
    auto* conv = app.add_subcommand("converge", "refinement study");
    std::string conv_source;
    int levels = 2;
    double conv_t_final = -1.0;
    conv->add_option("scenario", conv_source, "preset name or JSON config path")->required();
    conv->add_option("--levels", levels, "number of resolutions (each doubles the grid)");
    conv->add_option("--t-final", conv_t_final, "override final time");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(sources, out_dir, t_final, record_dt, jobs);
        if (verify->parsed())
            return cmd_verify(pairs, grid_n, order, nu_pairs, seed, ineq_csv, ineq_json);
        if (tfgs->parsed()) return cmd_tf_ground_state(zs, tf_csv_dir, tf_json);
        if (an->parsed()) return cmd_alpha_n(ns, restarts, an_seed, an_json);
        if (conv->parsed()) return cmd_converge(conv_source, levels, conv_t_final);
    } catch (const vpatom::ScenarioError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
