#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flutterlab/simulation.hpp"

namespace flutterlab {

struct TopologyConfig {
    TopologyKind kind = TopologyKind::ring;
    int k = 2;
};

struct OutputConfig {
    std::string dir = "out";
    bool timeseries = true;
    bool metrics = true;
    bool manifest = true;
};

struct FlutterBracketConfig {
    double V_lo = 0.0;
    double V_hi = 0.0;
};

struct FreqScanConfig {
    double V_lo = 0.0;
    double V_hi = 0.0;
    int points = 0;
};

struct SweepConfig {
    std::string axis;
    std::vector<std::string> values;
};

/// Fully validated run description. Loading rejects unknown keys and
/// reports every invariant violation with the offending field path.
struct RunConfig {
    WingParams wing;
    int n_grid = 1001;
    std::vector<FeatherSpec> feathers;
    TopologyConfig topology;
    ControlConfig control;
    GoalParams goals;  // chi/lambda are derived later, not configured
    VProfile v_profile;
    std::array<double, 4> x0{};
    std::vector<double> beta0;
    double dt = 0.0;
    double T = 0.0;
    int output_stride = 1;
    double E_abort = 0.0;
    double t_1 = 0.0;
    double reassemble_dv = 0.0;
    OutputConfig output;
    std::optional<FlutterBracketConfig> flutter_bracket;
    std::optional<FreqScanConfig> freq_scan;
    std::optional<SweepConfig> sweep_cfg;

    /// Warnings (e.g. overlapping feather strips) collected at load time.
    std::vector<std::string> warnings;
};

RunConfig load_config(const std::string& path);

/// Serializes the resolved configuration; the result loads back to an
/// equivalent RunConfig (the manifest contract).
std::string config_to_json(const RunConfig& cfg);

/// Builds mode shapes, topology and the runnable scenario.
Scenario build_scenario(const RunConfig& cfg);

/// Goal parameters with the topology-derived chi/lambda filled in.
GoalParams resolve_goals(const RunConfig& cfg, const Scenario& sc);

/// timeseries.csv with the fixed column contract
/// t,x1..x4,E,L,L_tilde,beta_1..beta_N,u_1..u_N.
void write_timeseries_csv(const std::string& path, const SimRecord& rec);

std::string timeseries_csv(const SimRecord& rec);

void write_modes_csv(const std::string& path, const ModeShapes& modes);

void write_coeffs_csv(const std::string& path, std::span<const FeatherSpec> specs,
                      std::span<const FeatherCoeffs> coeffs);

std::string metrics_json(const SimRecord& rec, const SuppressionMetrics& sm);

/// Writes timeseries.csv, metrics.json and a manifest echoing the
/// resolved config into out_dir. Every file is written to a temporary
/// name and renamed, so no partial file survives an error.
void write_outputs(const SimRecord& rec, const SuppressionMetrics& sm, const RunConfig& resolved,
                   const std::string& out_dir);

/// Atomic text-file write (write-then-rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace flutterlab
