#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "flutterlab/config.hpp"
#include "flutterlab/errors.hpp"

using namespace flutterlab;

#ifndef FLUTTERLAB_CONFIG_DIR
#define FLUTTERLAB_CONFIG_DIR "configs"
#endif

namespace {

std::filesystem::path shipped_config() {
    return std::filesystem::path(FLUTTERLAB_CONFIG_DIR) / "reference.json";
}

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "flutterlab_io_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// Writes a mutated copy of the shipped reference config and returns its path.
template <typename Mutate>
std::filesystem::path mutated_config(const std::string& name, Mutate&& mutate) {
    auto text = slurp(shipped_config());
    mutate(text);
    const auto path = temp_dir() / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    return path;
}

void replace_once(std::string& text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("the shipped reference configuration loads cleanly") {
    const auto cfg = load_config(shipped_config().string());
    CHECK(cfg.warnings.empty());
    CHECK(cfg.feathers.size() == 8);
    CHECK(cfg.control.law == ControlLaw::C);
    CHECK(cfg.control.gamma == std::vector<double>(8, 5.6));
    CHECK(cfg.n_grid == 1001);
    CHECK(cfg.v_profile.kind == VProfile::Kind::constant);
    CHECK(cfg.flutter_bracket.has_value());
    CHECK(cfg.freq_scan.has_value());
}

TEST_CASE("validation failures name the offending field") {
    SUBCASE("stiffness center outside the chord") {
        const auto path = mutated_config("bad_x0.json", [](std::string& t) {
            replace_once(t, "\"x0\": 0.65", "\"x0\": 1.4");
        });
        try {
            load_config(path.string());
            FAIL("expected a validation error");
        } catch (const ConfigError& e) {
            CHECK(e.path() == "wing.x0");
        }
    }
    SUBCASE("upper-surface feather with positive ceiling") {
        const auto path = mutated_config("bad_upper.json", [](std::string& t) {
            replace_once(t, "\"beta_min\": -0.35, \"beta_max\": 0.0",
                         "\"beta_min\": -0.35, \"beta_max\": 0.1");
        });
        try {
            load_config(path.string());
            FAIL("expected a validation error");
        } catch (const ConfigError& e) {
            CHECK(e.path() == "feathers[4].beta_max");
        }
    }
    SUBCASE("unknown keys are rejected") {
        const auto path = mutated_config("unknown_key.json", [](std::string& t) {
            replace_once(t, "\"rho\": 1.225", "\"rho\": 1.225, \"hum\": 3");
        });
        try {
            load_config(path.string());
            FAIL("expected a schema error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("hum") != std::string::npos);
        }
    }
    SUBCASE("parse errors are reported distinctly") {
        const auto path = temp_dir() / "garbage.json";
        std::ofstream(path) << "{ not json";
        try {
            load_config(path.string());
            FAIL("expected a parse error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("parse error") != std::string::npos);
        }
    }
    SUBCASE("divergence cutoff must exceed the energy bound") {
        const auto path = mutated_config("bad_abort.json", [](std::string& t) {
            replace_once(t, "\"E_abort\": 2000.0", "\"E_abort\": 5.0");
        });
        CHECK_THROWS_AS(load_config(path.string()), ConfigError);
    }
    SUBCASE("extended goal target cannot undercut the base target") {
        const auto path = mutated_config("bad_eps.json", [](std::string& t) {
            replace_once(t, "\"eps_dstar\": 4.0", "\"eps_dstar\": 0.5");
        });
        try {
            load_config(path.string());
            FAIL("expected a validation error");
        } catch (const ConfigError& e) {
            CHECK(e.path() == "goals.eps_dstar");
        }
    }
    SUBCASE("initial deflections must respect the interval") {
        const auto path = mutated_config("bad_beta0.json", [](std::string& t) {
            replace_once(t, "\"dt\": 0.001",
                         "\"beta0\": [0.1, 0.1, 0.1, 0.1, 0.1, -0.1, -0.1, -0.1],\n    \"dt\": 0.001");
        });
        try {
            load_config(path.string());
            FAIL("expected a validation error");
        } catch (const ConfigError& e) {
            CHECK(e.path() == "scenario.beta0[4]");
        }
    }
}

TEST_CASE("overlapping strips load with a warning") {
    const auto path = mutated_config("overlap.json", [](std::string& t) {
        replace_once(t, "\"z_lo\": 2.85, \"z_hi\": 3.9,  \"x_star\": 0.5",
                     "\"z_lo\": 1.9,  \"z_hi\": 3.9,  \"x_star\": 0.5");
    });
    const auto cfg = load_config(path.string());
    REQUIRE_FALSE(cfg.warnings.empty());
    CHECK(cfg.warnings.front().find("overlap") != std::string::npos);
}

TEST_CASE("scalar gains broadcast to every feather") {
    const auto cfg = load_config(shipped_config().string());
    CHECK(cfg.control.gamma.size() == cfg.feathers.size());
}

TEST_CASE("configuration round-trips through its JSON form") {
    const auto cfg = load_config(shipped_config().string());
    const auto dumped = config_to_json(cfg);
    const auto path = temp_dir() / "roundtrip.json";
    write_file_atomic(path.string(), dumped);
    const auto reloaded = load_config(path.string());
    CHECK(config_to_json(reloaded) == dumped);
}

TEST_CASE("outputs and the manifest reproduce the run") {
    auto cfg = load_config(shipped_config().string());
    cfg.T = 2.0;  // short run keeps the fixture cheap
    const auto sc = build_scenario(cfg);
    const auto gp = resolve_goals(cfg, sc);
    const auto rec = integrate(sc);
    const auto sm = metrics(rec, gp, sc.t_1);

    const auto out = temp_dir() / "run1";
    std::filesystem::remove_all(out);
    write_outputs(rec, sm, cfg, out.string());

    SUBCASE("three files with the stated row count") {
        CHECK(std::filesystem::exists(out / "timeseries.csv"));
        CHECK(std::filesystem::exists(out / "metrics.json"));
        CHECK(std::filesystem::exists(out / "manifest.json"));

        const auto csv = slurp(out / "timeseries.csv");
        const long rows = std::count(csv.begin(), csv.end(), '\n');
        const long expected = long(std::floor(cfg.T / (cfg.dt * cfg.output_stride))) + 1;
        CHECK(rows == expected + 1);  // plus the header

        const auto header = csv.substr(0, csv.find('\n'));
        CHECK(header ==
              "t,x1,x2,x3,x4,E,L,L_tilde,beta_1,beta_2,beta_3,beta_4,beta_5,beta_6,beta_7,"
              "beta_8,u_1,u_2,u_3,u_4,u_5,u_6,u_7,u_8");
    }
    SUBCASE("no temporary files survive") {
        for (const auto& entry : std::filesystem::directory_iterator(out))
            CHECK(entry.path().extension() != ".tmp");
    }
    SUBCASE("re-running from the manifest is byte-identical") {
        const auto manifest_cfg = load_config((out / "manifest.json").string());
        const auto sc2 = build_scenario(manifest_cfg);
        const auto rec2 = integrate(sc2);
        CHECK(timeseries_csv(rec2) == slurp(out / "timeseries.csv"));
    }
}

TEST_CASE("aborted runs are labeled in the metrics") {
    auto cfg = load_config(shipped_config().string());
    cfg.control.law = ControlLaw::off;
    cfg.control.gamma.clear();
    const auto sc = build_scenario(cfg);
    const auto rec = integrate(sc);
    REQUIRE(rec.status == SimRecord::Status::aborted_divergent);
    const auto sm = metrics(rec, resolve_goals(cfg, sc), 0.0);
    const auto json_text = metrics_json(rec, sm);
    CHECK(json_text.find("aborted-divergent") != std::string::npos);
    CHECK(json_text.find("\"t_damp\": null") != std::string::npos);
}
