#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>

#include "flutterlab/config.hpp"
#include "flutterlab/errors.hpp"

using namespace flutterlab;
using nlohmann::json;

namespace {

int thread_count_from_env() {
    const char* env = std::getenv("FLUTTERLAB_THREADS");
    if (!env) return 1;
    const int n = std::atoi(env);
    return n > 0 ? n : 1;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct LoadedConfig {
    RunConfig cfg;
    Scenario scenario;
    GoalParams goals;
};

LoadedConfig load(const std::string& config_path, const std::string& out_override) {
    LoadedConfig lc{load_config(config_path), {}, {}};
    for (const auto& w : lc.cfg.warnings) std::cerr << "warning: " << w << "\n";
    if (!out_override.empty()) lc.cfg.output.dir = out_override;
    lc.scenario = build_scenario(lc.cfg);
    lc.goals = resolve_goals(lc.cfg, lc.scenario);
    return lc;
}

int run_modes(const LoadedConfig& lc) {
    std::filesystem::create_directories(lc.cfg.output.dir);
    const auto path = std::filesystem::path(lc.cfg.output.dir) / "modes.csv";
    write_modes_csv(path.string(), lc.scenario.modes);
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int run_coeffs(const LoadedConfig& lc) {
    const auto& sc = lc.scenario;
    auto modal = modal_integrals(sc.wing, sc.modes);
    const double V = sc.v_profile.at(0.0);
    auto modal_v = evaluate_at_speed(modal, V);
    std::vector<FeatherCoeffs> coeffs;
    for (const auto& f : sc.feathers)
        coeffs.push_back(compute_feather_coeffs(sc.wing, f, sc.modes));
    attach_speed_terms(coeffs, invert_inertia(modal_v), modal_v, V);

    std::filesystem::create_directories(lc.cfg.output.dir);
    const auto path = std::filesystem::path(lc.cfg.output.dir) / "coeffs.csv";
    write_coeffs_csv(path.string(), sc.feathers, coeffs);
    std::cout << "wrote " << path.string() << " (V = " << V << " m/s)\n";
    return 0;
}

int run_flutter_speed(const LoadedConfig& lc) {
    if (!lc.cfg.flutter_bracket)
        throw ConfigError("flutter-speed needs a flutter_bracket block", "flutter_bracket");
    const auto res = find_flutter_speed(lc.scenario.wing, lc.scenario.modes,
                                        lc.cfg.flutter_bracket->V_lo,
                                        lc.cfg.flutter_bracket->V_hi);
    json j = {{"V_flat", res.V_flat}, {"alpha", res.alpha}, {"iterations", res.iterations}};
    std::filesystem::create_directories(lc.cfg.output.dir);
    const auto path = std::filesystem::path(lc.cfg.output.dir) / "flutter.json";
    write_file_atomic(path.string(), j.dump(2) + "\n");
    std::cout << "V_flat = " << fmt(res.V_flat) << " m/s (alpha = " << fmt(res.alpha) << ", "
              << res.iterations << " bisections)\n";
    return 0;
}

int run_freq_scan(const LoadedConfig& lc) {
    if (!lc.cfg.freq_scan) throw ConfigError("freq-scan needs a freq_scan block", "freq_scan");
    const auto& fs = *lc.cfg.freq_scan;
    std::vector<double> grid(fs.points);
    for (int i = 0; i < fs.points; ++i)
        grid[i] = fs.V_lo + (fs.V_hi - fs.V_lo) * double(i) / double(fs.points - 1);
    const auto rows = frequency_scan(lc.scenario.wing, lc.scenario.modes, grid);

    std::string out = "V,re1,im1,re2,im2,flagged\n";
    for (const auto& r : rows)
        out += fmt(r.V) + "," + fmt(r.branch[0].real()) + "," + fmt(r.branch[0].imag()) + "," +
               fmt(r.branch[1].real()) + "," + fmt(r.branch[1].imag()) + "," +
               (r.flagged ? "1" : "0") + "\n";
    std::filesystem::create_directories(lc.cfg.output.dir);
    const auto path = std::filesystem::path(lc.cfg.output.dir) / "freq_scan.csv";
    write_file_atomic(path.string(), out);
    std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
    return 0;
}

int run_simulate(const LoadedConfig& lc) {
    const auto rec = integrate(lc.scenario);
    const auto sm = metrics(rec, lc.goals, lc.scenario.t_1);
    write_outputs(rec, sm, lc.cfg, lc.cfg.output.dir);
    const bool aborted = rec.status == SimRecord::Status::aborted_divergent;
    std::cout << "status: " << (aborted ? "aborted-divergent" : "completed")
              << ", E_max = " << fmt(sm.E_max)
              << (sm.t_damp ? ", t_damp = " + fmt(*sm.t_damp) : ", t_damp = none") << "\n";
    return aborted ? 3 : 0;
}

int run_sweep(const LoadedConfig& lc) {
    if (!lc.cfg.sweep_cfg) throw ConfigError("sweep needs a sweep block", "sweep");
    const auto axis = sweep_axis_from_string(lc.cfg.sweep_cfg->axis);
    const auto entries = sweep(lc.scenario, lc.goals, axis, lc.cfg.sweep_cfg->values,
                               thread_count_from_env());

    const std::filesystem::path base(lc.cfg.output.dir);
    json summary = json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        json row = {{"value", e.value}};
        if (e.failed) {
            row["failed"] = true;
            row["error"] = e.error;
        } else {
            const auto dir = base / "sweep" / (std::to_string(i) + "_" + e.value);
            std::filesystem::create_directories(dir);
            write_timeseries_csv((dir / "timeseries.csv").string(), e.record);
            write_file_atomic((dir / "metrics.json").string(), metrics_json(e.record, e.metrics));
            row["failed"] = false;
            row["status"] = e.record.status == SimRecord::Status::completed
                                ? "completed"
                                : "aborted-divergent";
            row["t_damp"] = e.metrics.t_damp ? json(*e.metrics.t_damp) : json(nullptr);
            row["E_max"] = e.metrics.E_max;
            row["hold"] = e.metrics.hold;
        }
        summary.push_back(row);
    }
    std::filesystem::create_directories(base);
    write_file_atomic((base / "sweep_summary.json").string(), summary.dump(2) + "\n");
    std::cout << "wrote " << (base / "sweep_summary.json").string() << " (" << entries.size()
              << " entries)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// `check`: the gradient / descent / oracle property suites on the
// loaded configuration.

struct CheckReport {
    bool all_ok = true;
    void line(const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
        all_ok = all_ok && ok;
    }
};

double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

void check_oracle_equivalence(const LoadedConfig& lc, CheckReport& rep) {
    const auto& sc = lc.scenario;
    auto modal = modal_integrals(sc.wing, sc.modes);
    std::vector<FeatherCoeffs> coeffs;
    for (const auto& f : sc.feathers)
        coeffs.push_back(compute_feather_coeffs(sc.wing, f, sc.modes));

    std::mt19937 rng(0x5eed0001);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double v_ref = std::max(sc.v_profile.V0, 1.0);
    const std::vector<double> speeds = {0.0, 0.25 * v_ref, 0.5 * v_ref, v_ref, 1.25 * v_ref};

    double worst = 0.0;
    for (int draw = 0; draw < 1000; ++draw) {
        const double V = speeds[draw % speeds.size()];
        auto modal_v = evaluate_at_speed(modal, V);
        auto ss = assemble(modal_v, coeffs, V);

        PlantState state;
        state.beta.resize(coeffs.size());
        std::vector<double> u(coeffs.size());
        for (auto& v : state.x) v = unit(rng);
        for (auto& v : state.beta) v = 0.3 * unit(rng);
        for (auto& v : u) v = unit(rng);

        const auto fast = rhs(ss, state, u);
        const auto slow = rhs_oracle(modal_v, coeffs, state, u);
        double scale = 1e-300, diff = 0.0;
        for (int i = 0; i < 4; ++i) {
            scale = std::max(scale, std::abs(slow.x[i]));
            diff = std::max(diff, std::abs(fast.x[i] - slow.x[i]));
        }
        worst = std::max(worst, diff / scale);
    }
    rep.line("oracle-equivalence", worst < 1e-10,
             "max rel err " + fmt(worst) + " over 1000 draws (tol 1e-10)");
}

void check_ibp_identities(const LoadedConfig& lc, CheckReport& rep) {
    auto modes = build_mode_shapes(lc.cfg.wing, 1001);
    auto modal = modal_integrals(lc.cfg.wing, modes);

    const int n = 1001;
    const double l = lc.cfg.wing.l;
    auto quad = [&](auto&& f) {
        double h = l / (n - 1);
        double odd = 0.0, even = 0.0;
        for (int i = 1; i + 1 < n; i += 2) odd += f(i * h);
        for (int i = 2; i + 1 < n; i += 2) even += f(i * h);
        return h / 3.0 * (f(0.0) + 4.0 * odd + 2.0 * even + f(l));
    };
    const double a13_strong =
        quad([&](double z) { return lc.cfg.wing.EJ(z) * modes.f4_at(z) * modes.f_at(z); });
    const double b23_2_strong =
        quad([&](double z) { return lc.cfg.wing.GJ_K(z) * modes.phi2_at(z) * modes.phi_at(z); });

    const double e1 = rel_diff(a13_strong, modal.a13);
    const double e2 = rel_diff(b23_2_strong, modal.b23_2);
    rep.line("integration-by-parts", e1 < 1e-6 && e2 < 1e-6,
             "bending rel err " + fmt(e1) + ", torsion rel err " + fmt(e2) + " (tol 1e-6)");
}

void check_sg_descent(const LoadedConfig& lc, CheckReport& rep) {
    const auto& sc = lc.scenario;
    if (sc.topo.N < 2) {
        rep.line("speed-gradient-descent", false, "needs a topology over >= 2 feathers");
        return;
    }
    auto modal = modal_integrals(sc.wing, sc.modes);
    const double V = std::max(sc.v_profile.V0, 1.0);
    auto modal_v = evaluate_at_speed(modal, V);
    std::vector<FeatherCoeffs> coeffs;
    for (const auto& f : sc.feathers)
        coeffs.push_back(compute_feather_coeffs(sc.wing, f, sc.modes));
    auto ss = assemble(modal_v, coeffs, V);
    attach_speed_terms(coeffs, ss.d, modal_v, V);

    GoalParams gp = lc.goals;
    std::vector<double> gamma(coeffs.size(), 1.0);

    std::mt19937 rng(0x5eed0002);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    double worst = 0.0;
    bool strict_ok = true;
    for (int draw = 0; draw < 1000; ++draw) {
        std::array<double, 4> x;
        std::vector<double> beta(coeffs.size());
        for (auto& v : x) v = unit(rng);
        for (auto& v : beta) v = 0.3 * unit(rng);

        const auto g = sg_gradient(x, beta, sc.topo, coeffs, gp);
        const auto uc = law_C(x, beta, sc.topo, coeffs, gamma, gp);
        const std::vector<double> zero(coeffs.size(), 0.0);

        const double with_control = dLtilde_dt(ss, x, beta, uc, sc.topo, gp);
        const double without = dLtilde_dt(ss, x, beta, zero, sc.topo, gp);
        double drop = 0.0, gsq = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p) {
            drop += gamma[p] * g[p] * g[p];
            gsq += g[p] * g[p];
        }
        const double scale = std::max({std::abs(without), drop, 1e-12});
        worst = std::max(worst, std::abs(with_control - (without - drop)) / scale);
        if (gsq > 1e-12 && !(with_control < without)) strict_ok = false;
    }
    rep.line("speed-gradient-descent", worst < 1e-9 && strict_ok,
             "max rel err " + fmt(worst) + " over 1000 states (tol 1e-9), strict decrease " +
                 (strict_ok ? "held" : "VIOLATED"));
}

void check_gradient_fd(const LoadedConfig& lc, CheckReport& rep) {
    const auto& sc = lc.scenario;
    if (sc.topo.N < 2) {
        rep.line("gradient-finite-difference", false, "needs a topology over >= 2 feathers");
        return;
    }
    auto modal = modal_integrals(sc.wing, sc.modes);
    const double V = std::max(sc.v_profile.V0, 1.0);
    auto modal_v = evaluate_at_speed(modal, V);
    std::vector<FeatherCoeffs> coeffs;
    for (const auto& f : sc.feathers)
        coeffs.push_back(compute_feather_coeffs(sc.wing, f, sc.modes));
    auto ss = assemble(modal_v, coeffs, V);
    attach_speed_terms(coeffs, ss.d, modal_v, V);
    GoalParams gp = lc.goals;

    std::mt19937 rng(0x5eed0003);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double step = 1e-6;

    double worst = 0.0;
    for (int draw = 0; draw < 200; ++draw) {
        std::array<double, 4> x;
        std::vector<double> beta(coeffs.size());
        for (auto& v : x) v = unit(rng);
        for (auto& v : beta) v = 0.3 * unit(rng);
        std::vector<double> u(coeffs.size());
        for (auto& v : u) v = unit(rng);

        const auto g = sg_gradient(x, beta, sc.topo, coeffs, gp);
        double gscale = 1e-12;
        for (double v : g) gscale = std::max(gscale, std::abs(v));
        for (std::size_t p = 0; p < u.size(); ++p) {
            auto up = u, um = u;
            up[p] += step;
            um[p] -= step;
            const double fd = (dLtilde_dt(ss, x, beta, up, sc.topo, gp) -
                               dLtilde_dt(ss, x, beta, um, sc.topo, gp)) /
                              (2.0 * step);
            worst = std::max(worst, std::abs(fd - g[p]) / gscale);
        }
    }
    rep.line("gradient-finite-difference", worst < 1e-6,
             "max rel err " + fmt(worst) + " over 200 states (tol 1e-6)");
}

void check_consensus(const LoadedConfig& lc, CheckReport& rep) {
    bool ok = true;
    std::string detail;
    for (TopologyKind kind : {TopologyKind::ring, TopologyKind::complete}) {
        for (int n : {4, 8, 16}) {
            Scenario sc;
            sc.wing = lc.cfg.wing;
            sc.modes = lc.scenario.modes;
            for (int i = 0; i < n; ++i) {
                FeatherSpec f;
                f.id = i + 1;
                f.side = i < n / 2 ? Side::lower : Side::upper;
                const int slot = i % (n / 2);
                const double lo = 0.3 * sc.wing.l, hi = sc.wing.l;
                f.z_lo = lo + (hi - lo) * double(slot) / (n / 2);
                f.z_hi = lo + (hi - lo) * double(slot + 1) / (n / 2);
                f.x_star = 0.75 * sc.wing.b(f.z_anchor());
                f.x_k = sc.wing.b(f.z_anchor());
                if (f.side == Side::lower) {
                    f.beta_min = 0.0;
                    f.beta_max = 0.6;
                } else {
                    f.beta_min = -0.6;
                    f.beta_max = 0.0;
                }
                sc.feathers.push_back(f);
            }
            sc.topo = build_topology(sc.feathers, kind, 2);
            sc.control.law = ControlLaw::C;
            sc.control.gamma.assign(n, 1.0);
            sc.control.saturation = false;
            sc.v_profile = {VProfile::Kind::constant, 0.0, 0.0, 0.0};
            sc.x0 = {0.0, 0.0, 0.0, 0.0};
            sc.beta0.resize(n);
            for (int i = 0; i < n; ++i)
                sc.beta0[i] = 0.25 + 0.2 * std::sin(double(i + 1));
            sc.dt = 1e-3;
            sc.T = 2.0;
            sc.output_stride = 1;
            sc.E_abort = 1e9;

            // chi = lambda = 0 reduction: zero out the modal weights by
            // pinning x at the origin (V = 0 gives no feather-to-mode path).
            const auto rec = integrate(sc);

            double sum0 = 0.0, sumT = 0.0;
            for (double b : rec.beta.front()) sum0 += b;
            for (double b : rec.beta.back()) sumT += b;
            const double drift = std::abs(sumT - sum0) / sc.T;
            if (drift > 1e-9) ok = false;

            double prev = disagreement(rec.beta.front(), sc.topo);
            for (std::size_t r = 1; r < rec.beta.size(); ++r) {
                const double cur = disagreement(rec.beta[r], sc.topo);
                if (cur > prev + 1e-12) {
                    ok = false;
                    break;
                }
                prev = cur;
            }
            if (!ok && detail.empty())
                detail = "violated at " + to_string(kind) + " N=" + std::to_string(n);
        }
    }
    rep.line("consensus-subflow", ok,
             ok ? "sum(beta) conserved to 1e-9/s, disagreement monotone (ring/complete, N=4,8,16)"
                : detail);
}

void check_energy(const LoadedConfig& lc, CheckReport& rep) {
    auto modal = modal_integrals(lc.scenario.wing, lc.scenario.modes);
    std::mt19937 rng(0x5eed0004);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double emin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100000; ++i) {
        std::array<double, 4> x;
        double norm = 0.0;
        for (auto& v : x) {
            v = gauss(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : x) v /= norm;
        emin = std::min(emin, total_energy(modal, x));
    }
    const bool pd = energy_positive_definite(modal) && emin > 0.0;

    // V = 0 conservative run
    Scenario sc = lc.scenario;
    sc.control.law = ControlLaw::off;
    sc.control.gamma.clear();
    sc.v_profile = {VProfile::Kind::constant, 0.0, 0.0, 0.0};
    sc.x0 = {0.02, 0.0, 0.01, 0.0};
    sc.beta0.clear();
    sc.dt = 1e-3;
    sc.T = 10.0;  // 1e4 steps
    sc.output_stride = 100;
    sc.E_abort = 1e9;
    const auto rec = integrate(sc);
    double drift = 0.0;
    for (double e : rec.E) drift = std::max(drift, std::abs(e - rec.E.front()));
    drift /= rec.E.front();

    rep.line("energy-definiteness", pd && drift < 1e-6,
             "min unit-state energy " + fmt(emin) + ", V=0 drift " + fmt(drift) +
                 " over 1e4 steps (tol 1e-6)");
}

int run_check(const LoadedConfig& lc) {
    CheckReport rep;
    check_oracle_equivalence(lc, rep);
    check_ibp_identities(lc, rep);
    check_sg_descent(lc, rep);
    check_gradient_fd(lc, rep);
    check_consensus(lc, rep);
    check_energy(lc, rep);
    return rep.all_ok ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flutterlab - flexural-torsional flutter suppression laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_override, "output directory (overrides config)");
        return sub;
    };

    auto* cmd_modes = add_common(app.add_subcommand("modes", "dump mode shapes as CSV"));
    auto* cmd_coeffs = add_common(app.add_subcommand("coeffs", "dump per-feather coefficients"));
    auto* cmd_flutter =
        add_common(app.add_subcommand("flutter-speed", "locate the flutter boundary"));
    auto* cmd_scan =
        add_common(app.add_subcommand("freq-scan", "eigenvalue branches vs airspeed"));
    auto* cmd_sim = add_common(app.add_subcommand("simulate", "run one scenario"));
    auto* cmd_sweep = add_common(app.add_subcommand("sweep", "run a parameter sweep"));
    auto* cmd_check = add_common(app.add_subcommand("check", "run the property suites"));

    CLI11_PARSE(app, argc, argv);

    try {
        const LoadedConfig lc = load(config_path, out_override);
        if (cmd_modes->parsed()) return run_modes(lc);
        if (cmd_coeffs->parsed()) return run_coeffs(lc);
        if (cmd_flutter->parsed()) return run_flutter_speed(lc);
        if (cmd_scan->parsed()) return run_freq_scan(lc);
        if (cmd_sim->parsed()) return run_simulate(lc);
        if (cmd_sweep->parsed()) return run_sweep(lc);
        if (cmd_check->parsed()) return run_check(lc);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "numerical divergence: " << e.what() << "\n";
        return 3;
    } catch (const ComputationError& e) {
        std::cerr << "computation error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
