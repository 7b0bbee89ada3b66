#include "flutterlab/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "flutterlab/errors.hpp"

namespace flutterlab {

using nlohmann::json;

namespace {

std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("expected an object", path);
}

void reject_unknown_keys(const json& j, const std::string& path,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\"", path);
}

const json& require(const json& j, const std::string& path, const std::string& key) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("missing required key", join_path(path, key));
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError("expected a number", path);
    return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError("expected an integer", path);
    return j.get<int>();
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError("expected a boolean", path);
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError("expected a string", path);
    return j.get<std::string>();
}

SpanProfile as_profile(const json& j, const std::string& path) {
    if (j.is_number()) return SpanProfile(j.get<double>());
    if (j.is_array()) {
        std::vector<std::pair<double, double>> samples;
        for (const auto& entry : j) {
            if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
                !entry[1].is_number())
                throw ConfigError("table entries must be [z, value] pairs", path);
            samples.emplace_back(entry[0].get<double>(), entry[1].get<double>());
        }
        try {
            return SpanProfile::tabulated(std::move(samples));
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), path);
        }
    }
    throw ConfigError("expected a number or a [z, value] table", path);
}

WingParams parse_wing(const json& j, int& n_grid) {
    expect_object(j, "wing");
    reject_unknown_keys(j, "wing",
                        {"l", "b", "x0", "sigma_T", "m", "J_m", "EJ", "GJ_K", "Cy_alpha", "rho",
                         "n_grid"});
    WingParams w;
    w.l = as_number(require(j, "wing", "l"), "wing.l");
    w.b = as_profile(require(j, "wing", "b"), "wing.b");
    w.x0 = as_profile(require(j, "wing", "x0"), "wing.x0");
    w.sigma_T = as_profile(require(j, "wing", "sigma_T"), "wing.sigma_T");
    w.m = as_profile(require(j, "wing", "m"), "wing.m");
    w.J_m = as_profile(require(j, "wing", "J_m"), "wing.J_m");
    w.EJ = as_profile(require(j, "wing", "EJ"), "wing.EJ");
    w.GJ_K = as_profile(require(j, "wing", "GJ_K"), "wing.GJ_K");
    w.Cy_alpha = as_number(require(j, "wing", "Cy_alpha"), "wing.Cy_alpha");
    w.rho = as_number(require(j, "wing", "rho"), "wing.rho");
    n_grid = j.contains("n_grid") ? as_int(j["n_grid"], "wing.n_grid") : 1001;
    w.validate();
    if (n_grid < 201 || n_grid % 2 == 0)
        throw ConfigError("must be odd and >= 201", "wing.n_grid");
    return w;
}

std::vector<FeatherSpec> parse_feathers(const json& j, const WingParams& wing,
                                        std::vector<std::string>& warnings) {
    if (!j.is_array()) throw ConfigError("expected an array", "feathers");
    std::vector<FeatherSpec> out;
    std::set<int> ids;
    int index = 0;
    for (const auto& entry : j) {
        const std::string where = "feathers[" + std::to_string(index) + "]";
        expect_object(entry, where);
        reject_unknown_keys(entry, where,
                            {"id", "side", "z_lo", "z_hi", "x_star", "x_k", "beta_min",
                             "beta_max"});
        FeatherSpec f;
        f.id = as_int(require(entry, where, "id"), where + ".id");
        f.side = [&] {
            try {
                return side_from_string(as_string(require(entry, where, "side"), where + ".side"));
            } catch (const ConfigError& e) {
                throw ConfigError(e.what(), where + ".side");
            }
        }();
        f.z_lo = as_number(require(entry, where, "z_lo"), where + ".z_lo");
        f.z_hi = as_number(require(entry, where, "z_hi"), where + ".z_hi");
        f.x_star = as_number(require(entry, where, "x_star"), where + ".x_star");
        f.x_k = as_number(require(entry, where, "x_k"), where + ".x_k");
        f.beta_min = as_number(require(entry, where, "beta_min"), where + ".beta_min");
        f.beta_max = as_number(require(entry, where, "beta_max"), where + ".beta_max");
        f.validate(wing, where);
        if (!ids.insert(f.id).second)
            throw ConfigError("duplicate feather id", where + ".id");
        out.push_back(f);
        ++index;
    }

    // Overlap on the same surface is allowed (superposition) but flagged.
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t k = i + 1; k < out.size(); ++k) {
            const auto& a = out[i];
            const auto& b = out[k];
            if (a.side != b.side) continue;
            const bool span_overlap = a.z_lo < b.z_hi && b.z_lo < a.z_hi;
            const bool chord_overlap = a.x_star < b.x_k && b.x_star < a.x_k;
            if (span_overlap && chord_overlap)
                warnings.push_back("feathers " + std::to_string(a.id) + " and " +
                                   std::to_string(b.id) + " overlap; superposition assumed");
        }
    return out;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("JSON parse error: ") + e.what());
    }
    expect_object(j, "");
    reject_unknown_keys(j, "(root)",
                        {"wing", "feathers", "topology", "control", "goals", "scenario", "output",
                         "flutter_bracket", "freq_scan", "sweep"});

    RunConfig cfg;
    cfg.wing = parse_wing(require(j, "", "wing"), cfg.n_grid);
    cfg.feathers = parse_feathers(require(j, "", "feathers"), cfg.wing, cfg.warnings);
    const int n = int(cfg.feathers.size());

    {
        const auto& t = require(j, "", "topology");
        expect_object(t, "topology");
        reject_unknown_keys(t, "topology", {"kind", "k"});
        try {
            cfg.topology.kind =
                topology_kind_from_string(as_string(require(t, "topology", "kind"), "topology.kind"));
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), "topology.kind");
        }
        cfg.topology.k = t.contains("k") ? as_int(t["k"], "topology.k") : 2;
    }

    {
        const auto& c = require(j, "", "control");
        expect_object(c, "control");
        reject_unknown_keys(c, "control", {"law", "gamma", "saturation", "law_c_position_form"});
        try {
            cfg.control.law =
                control_law_from_string(as_string(require(c, "control", "law"), "control.law"));
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), "control.law");
        }
        if (c.contains("gamma")) {
            if (c["gamma"].is_number()) {
                cfg.control.gamma.assign(std::size_t(n), c["gamma"].get<double>());
            } else if (c["gamma"].is_array()) {
                for (const auto& g : c["gamma"])
                    cfg.control.gamma.push_back(as_number(g, "control.gamma"));
            } else {
                throw ConfigError("expected a number or array", "control.gamma");
            }
        } else if (cfg.control.law != ControlLaw::off) {
            throw ConfigError("missing required key", "control.gamma");
        }
        cfg.control.saturation =
            c.contains("saturation") ? as_bool(c["saturation"], "control.saturation") : true;
        cfg.control.law_c_position_form =
            c.contains("law_c_position_form")
                ? as_bool(c["law_c_position_form"], "control.law_c_position_form")
                : false;
        cfg.control.validate(n);
    }

    {
        const auto& g = require(j, "", "goals");
        expect_object(g, "goals");
        reject_unknown_keys(g, "goals", {"E_star", "eps_star", "eps_beta", "eps_dstar"});
        cfg.goals.E_star = as_number(require(g, "goals", "E_star"), "goals.E_star");
        cfg.goals.eps_star = as_number(require(g, "goals", "eps_star"), "goals.eps_star");
        cfg.goals.eps_beta = as_number(require(g, "goals", "eps_beta"), "goals.eps_beta");
        cfg.goals.eps_dstar = as_number(require(g, "goals", "eps_dstar"), "goals.eps_dstar");
        cfg.goals.validate();
    }

    {
        const auto& s = require(j, "", "scenario");
        expect_object(s, "scenario");
        reject_unknown_keys(s, "scenario",
                            {"V", "x0", "beta0", "dt", "T", "output_stride", "E_abort", "t_1",
                             "reassemble_dv"});
        const auto& v = require(s, "scenario", "V");
        expect_object(v, "scenario.V");
        reject_unknown_keys(v, "scenario.V", {"profile", "V0", "V1", "t_ramp"});
        const std::string profile =
            as_string(require(v, "scenario.V", "profile"), "scenario.V.profile");
        if (profile == "constant") {
            cfg.v_profile.kind = VProfile::Kind::constant;
            cfg.v_profile.V0 = as_number(require(v, "scenario.V", "V0"), "scenario.V.V0");
        } else if (profile == "ramp") {
            cfg.v_profile.kind = VProfile::Kind::ramp;
            cfg.v_profile.V0 = as_number(require(v, "scenario.V", "V0"), "scenario.V.V0");
            cfg.v_profile.V1 = as_number(require(v, "scenario.V", "V1"), "scenario.V.V1");
            cfg.v_profile.t_ramp =
                as_number(require(v, "scenario.V", "t_ramp"), "scenario.V.t_ramp");
        } else {
            throw ConfigError("profile must be \"constant\" or \"ramp\"", "scenario.V.profile");
        }

        const auto& x0 = require(s, "scenario", "x0");
        if (!x0.is_array() || x0.size() != 4)
            throw ConfigError("expected an array of 4 numbers", "scenario.x0");
        for (int i = 0; i < 4; ++i) cfg.x0[i] = as_number(x0[i], "scenario.x0");

        if (s.contains("beta0")) {
            if (!s["beta0"].is_array())
                throw ConfigError("expected an array", "scenario.beta0");
            for (const auto& b : s["beta0"])
                cfg.beta0.push_back(as_number(b, "scenario.beta0"));
            if (int(cfg.beta0.size()) != n)
                throw ConfigError("needs one entry per feather", "scenario.beta0");
            for (int i = 0; i < n; ++i)
                if (cfg.beta0[i] < cfg.feathers[i].beta_min ||
                    cfg.beta0[i] > cfg.feathers[i].beta_max)
                    throw ConfigError("initial deflection outside the admissible interval",
                                      "scenario.beta0[" + std::to_string(i) + "]");
        }

        cfg.dt = as_number(require(s, "scenario", "dt"), "scenario.dt");
        cfg.T = as_number(require(s, "scenario", "T"), "scenario.T");
        cfg.output_stride = s.contains("output_stride")
                                ? as_int(s["output_stride"], "scenario.output_stride")
                                : 1;
        cfg.E_abort = as_number(require(s, "scenario", "E_abort"), "scenario.E_abort");
        cfg.t_1 = s.contains("t_1") ? as_number(s["t_1"], "scenario.t_1") : 0.0;
        cfg.reassemble_dv =
            s.contains("reassemble_dv") ? as_number(s["reassemble_dv"], "scenario.reassemble_dv") : 0.0;

        if (!(cfg.dt > 0.0)) throw ConfigError("must be strictly positive", "scenario.dt");
        if (!(cfg.T > cfg.dt)) throw ConfigError("horizon must exceed one step", "scenario.T");
        if (cfg.output_stride < 1) throw ConfigError("must be >= 1", "scenario.output_stride");
        if (!(cfg.E_abort > cfg.goals.E_star))
            throw ConfigError("divergence cutoff must exceed goals.E_star", "scenario.E_abort");
    }

    if (j.contains("output")) {
        const auto& o = j["output"];
        expect_object(o, "output");
        reject_unknown_keys(o, "output", {"dir", "timeseries", "metrics", "manifest"});
        if (o.contains("dir")) cfg.output.dir = as_string(o["dir"], "output.dir");
        if (o.contains("timeseries"))
            cfg.output.timeseries = as_bool(o["timeseries"], "output.timeseries");
        if (o.contains("metrics")) cfg.output.metrics = as_bool(o["metrics"], "output.metrics");
        if (o.contains("manifest")) cfg.output.manifest = as_bool(o["manifest"], "output.manifest");
    }

    if (j.contains("flutter_bracket")) {
        const auto& f = j["flutter_bracket"];
        expect_object(f, "flutter_bracket");
        reject_unknown_keys(f, "flutter_bracket", {"V_lo", "V_hi"});
        FlutterBracketConfig fb;
        fb.V_lo = as_number(require(f, "flutter_bracket", "V_lo"), "flutter_bracket.V_lo");
        fb.V_hi = as_number(require(f, "flutter_bracket", "V_hi"), "flutter_bracket.V_hi");
        if (!(0.0 <= fb.V_lo && fb.V_lo < fb.V_hi))
            throw ConfigError("need 0 <= V_lo < V_hi", "flutter_bracket.V_lo");
        cfg.flutter_bracket = fb;
    }

    if (j.contains("freq_scan")) {
        const auto& f = j["freq_scan"];
        expect_object(f, "freq_scan");
        reject_unknown_keys(f, "freq_scan", {"V_lo", "V_hi", "points"});
        FreqScanConfig fs;
        fs.V_lo = as_number(require(f, "freq_scan", "V_lo"), "freq_scan.V_lo");
        fs.V_hi = as_number(require(f, "freq_scan", "V_hi"), "freq_scan.V_hi");
        fs.points = as_int(require(f, "freq_scan", "points"), "freq_scan.points");
        if (!(0.0 <= fs.V_lo && fs.V_lo < fs.V_hi) || fs.points < 2)
            throw ConfigError("need 0 <= V_lo < V_hi and points >= 2", "freq_scan");
        cfg.freq_scan = fs;
    }

    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        expect_object(s, "sweep");
        reject_unknown_keys(s, "sweep", {"axis", "values"});
        SweepConfig sw;
        sw.axis = as_string(require(s, "sweep", "axis"), "sweep.axis");
        sweep_axis_from_string(sw.axis);  // validates
        const auto& vals = require(s, "sweep", "values");
        if (!vals.is_array()) throw ConfigError("expected an array", "sweep.values");
        for (const auto& v : vals) {
            if (v.is_string())
                sw.values.push_back(v.get<std::string>());
            else if (v.is_number())
                sw.values.push_back(json(v).dump());
            else
                throw ConfigError("values must be numbers or strings", "sweep.values");
        }
        cfg.sweep_cfg = sw;
    }

    if (cfg.feathers.empty() && cfg.control.law != ControlLaw::off)
        throw ConfigError("control laws need at least one feather", "control.law");

    return cfg;
}

namespace {

json profile_to_json(const SpanProfile& p) {
    if (!p.is_tabulated()) return p.constant_value();
    json arr = json::array();
    for (const auto& [z, v] : p.table()) arr.push_back(json::array({z, v}));
    return arr;
}

}  // namespace

std::string config_to_json(const RunConfig& cfg) {
    json j;
    j["wing"] = {{"l", cfg.wing.l},
                 {"b", profile_to_json(cfg.wing.b)},
                 {"x0", profile_to_json(cfg.wing.x0)},
                 {"sigma_T", profile_to_json(cfg.wing.sigma_T)},
                 {"m", profile_to_json(cfg.wing.m)},
                 {"J_m", profile_to_json(cfg.wing.J_m)},
                 {"EJ", profile_to_json(cfg.wing.EJ)},
                 {"GJ_K", profile_to_json(cfg.wing.GJ_K)},
                 {"Cy_alpha", cfg.wing.Cy_alpha},
                 {"rho", cfg.wing.rho},
                 {"n_grid", cfg.n_grid}};

    j["feathers"] = json::array();
    for (const auto& f : cfg.feathers)
        j["feathers"].push_back({{"id", f.id},
                                 {"side", to_string(f.side)},
                                 {"z_lo", f.z_lo},
                                 {"z_hi", f.z_hi},
                                 {"x_star", f.x_star},
                                 {"x_k", f.x_k},
                                 {"beta_min", f.beta_min},
                                 {"beta_max", f.beta_max}});

    j["topology"] = {{"kind", to_string(cfg.topology.kind)}, {"k", cfg.topology.k}};

    json control = {{"law", to_string(cfg.control.law)},
                    {"saturation", cfg.control.saturation},
                    {"law_c_position_form", cfg.control.law_c_position_form}};
    if (!cfg.control.gamma.empty()) control["gamma"] = cfg.control.gamma;
    j["control"] = control;

    j["goals"] = {{"E_star", cfg.goals.E_star},
                  {"eps_star", cfg.goals.eps_star},
                  {"eps_beta", cfg.goals.eps_beta},
                  {"eps_dstar", cfg.goals.eps_dstar}};

    json v;
    if (cfg.v_profile.kind == VProfile::Kind::constant)
        v = {{"profile", "constant"}, {"V0", cfg.v_profile.V0}};
    else
        v = {{"profile", "ramp"},
             {"V0", cfg.v_profile.V0},
             {"V1", cfg.v_profile.V1},
             {"t_ramp", cfg.v_profile.t_ramp}};

    json scenario = {{"V", v},
                     {"x0", cfg.x0},
                     {"dt", cfg.dt},
                     {"T", cfg.T},
                     {"output_stride", cfg.output_stride},
                     {"E_abort", cfg.E_abort},
                     {"t_1", cfg.t_1},
                     {"reassemble_dv", cfg.reassemble_dv}};
    if (!cfg.beta0.empty()) scenario["beta0"] = cfg.beta0;
    j["scenario"] = scenario;

    j["output"] = {{"dir", cfg.output.dir},
                   {"timeseries", cfg.output.timeseries},
                   {"metrics", cfg.output.metrics},
                   {"manifest", cfg.output.manifest}};

    if (cfg.flutter_bracket)
        j["flutter_bracket"] = {{"V_lo", cfg.flutter_bracket->V_lo},
                                {"V_hi", cfg.flutter_bracket->V_hi}};
    if (cfg.freq_scan)
        j["freq_scan"] = {{"V_lo", cfg.freq_scan->V_lo},
                          {"V_hi", cfg.freq_scan->V_hi},
                          {"points", cfg.freq_scan->points}};
    if (cfg.sweep_cfg) {
        json values = json::array();
        for (const auto& v_ : cfg.sweep_cfg->values) values.push_back(v_);
        j["sweep"] = {{"axis", cfg.sweep_cfg->axis}, {"values", values}};
    }

    return j.dump(2) + "\n";
}

Scenario build_scenario(const RunConfig& cfg) {
    Scenario sc;
    sc.wing = cfg.wing;
    sc.modes = build_mode_shapes(cfg.wing, cfg.n_grid);
    sc.feathers = cfg.feathers;
    sc.topo_kind = cfg.topology.kind;
    sc.topo_k = cfg.topology.k;
    if (cfg.feathers.size() >= 2)
        sc.topo = build_topology(cfg.feathers, cfg.topology.kind, cfg.topology.k);
    sc.control = cfg.control;
    sc.v_profile = cfg.v_profile;
    sc.x0 = cfg.x0;
    sc.beta0 = cfg.beta0;
    sc.dt = cfg.dt;
    sc.T = cfg.T;
    sc.output_stride = cfg.output_stride;
    sc.E_abort = cfg.E_abort;
    sc.t_1 = cfg.t_1;
    sc.reassemble_dv = cfg.reassemble_dv;
    sc.validate();
    return sc;
}

GoalParams resolve_goals(const RunConfig& cfg, const Scenario& sc) {
    GoalParams gp = cfg.goals;
    if (sc.topo.N == int(sc.feathers.size()) && sc.topo.N >= 2) {
        auto [chi, lambda] = chi_lambda(sc.topo, sc.modes, sc.feathers);
        gp.chi = chi;
        gp.lambda = lambda;
    }
    gp.validate();
    return gp;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string timeseries_csv(const SimRecord& rec) {
    std::string out = "t,x1,x2,x3,x4,E,L,L_tilde";
    for (int i = 1; i <= rec.n_feathers; ++i) out += ",beta_" + std::to_string(i);
    for (int i = 1; i <= rec.n_feathers; ++i) out += ",u_" + std::to_string(i);
    out += "\n";
    for (std::size_t r = 0; r < rec.t.size(); ++r) {
        out += fmt(rec.t[r]);
        for (double v : rec.x[r]) out += "," + fmt(v);
        out += "," + fmt(rec.E[r]);
        out += "," + fmt(rec.L[r]);
        out += "," + fmt(rec.L_tilde[r]);
        for (double v : rec.beta[r]) out += "," + fmt(v);
        for (double v : rec.u[r]) out += "," + fmt(v);
        out += "\n";
    }
    return out;
}

void write_timeseries_csv(const std::string& path, const SimRecord& rec) {
    write_file_atomic(path, timeseries_csv(rec));
}

void write_modes_csv(const std::string& path, const ModeShapes& modes) {
    std::string out = "z,f,f2,phi,phi1\n";
    for (std::size_t i = 0; i < modes.grid.size(); ++i)
        out += fmt(modes.grid[i]) + "," + fmt(modes.f[i]) + "," + fmt(modes.f2[i]) + "," +
               fmt(modes.phi[i]) + "," + fmt(modes.phi1[i]) + "\n";
    write_file_atomic(path, out);
}

void write_coeffs_csv(const std::string& path, std::span<const FeatherSpec> specs,
                      std::span<const FeatherCoeffs> coeffs) {
    std::string out = "id,side,G,H,I,J,A,B,C,D,A_bar,B_bar,C_bar,D_bar,s1,s2,mu,nu\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& c = coeffs[i];
        out += std::to_string(specs[i].id) + "," + to_string(specs[i].side);
        for (double v : {c.G, c.H, c.I, c.J, c.A, c.B, c.C, c.D, c.A_bar, c.B_bar, c.C_bar,
                         c.D_bar, c.s1, c.s2, c.mu, c.nu})
            out += "," + fmt(v);
        out += "\n";
    }
    write_file_atomic(path, out);
}

std::string metrics_json(const SimRecord& rec, const SuppressionMetrics& sm) {
    json j;
    j["status"] =
        rec.status == SimRecord::Status::completed ? "completed" : "aborted-divergent";
    j["t_damp"] = sm.t_damp ? json(*sm.t_damp) : json(nullptr);
    j["E_max"] = sm.E_max;
    j["hold"] = sm.hold;
    j["L_ok"] = sm.L_ok;
    j["Ltilde_ok"] = sm.Ltilde_ok;
    j["T"] = sm.horizon;
    return j.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("rename failed for " + path + ": " + ec.message());
}

void write_outputs(const SimRecord& rec, const SuppressionMetrics& sm, const RunConfig& resolved,
                   const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    if (resolved.output.timeseries)
        write_timeseries_csv((dir / "timeseries.csv").string(), rec);
    if (resolved.output.metrics)
        write_file_atomic((dir / "metrics.json").string(), metrics_json(rec, sm));
    if (resolved.output.manifest)
        write_file_atomic((dir / "manifest.json").string(), config_to_json(resolved));
}

}  // namespace flutterlab
