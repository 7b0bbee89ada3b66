#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flutterlab/control.hpp"
#include "flutterlab/state_space.hpp"

namespace flutterlab {

struct VProfile {
    enum class Kind { constant, ramp };
    Kind kind = Kind::constant;
    double V0 = 0.0;
    double V1 = 0.0;     // ramp target
    double t_ramp = 0.0; // ramp duration

    double at(double t) const;
};

/// Everything one run needs. Feather coefficients, modal integrals and
/// the goal weights are derived inside integrate(), so a Scenario is
/// reproducible from its plain fields alone.
struct Scenario {
    WingParams wing;
    ModeShapes modes;
    std::vector<FeatherSpec> feathers;
    Topology topo;
    TopologyKind topo_kind = TopologyKind::ring;  // retained for sweeps
    int topo_k = 2;
    ControlConfig control;
    VProfile v_profile;
    std::array<double, 4> x0{};
    std::vector<double> beta0;  // empty means all neutral
    double dt = 0.0;
    double T = 0.0;
    int output_stride = 1;
    double E_abort = 0.0;
    double t_1 = 0.0;           // moment the critical speed is reached (ramps)
    double reassemble_dv = 0.0; // 0 = reassemble every step on ramps

    void validate() const;
};

struct SimRecord {
    enum class Status { completed, aborted_divergent };

    int n_feathers = 0;
    std::vector<double> t;
    std::vector<std::array<double, 4>> x;
    std::vector<std::vector<double>> beta;
    std::vector<std::vector<double>> u;
    std::vector<double> E, L, L_tilde;
    Status status = Status::completed;
    double end_time = 0.0;
};

struct SuppressionMetrics {
    std::optional<double> t_damp;  // first time E stays <= E_star through T
    double E_max = 0.0;
    bool hold = false;
    bool L_ok = false;
    bool Ltilde_ok = false;
    double horizon = 0.0;
};

/// Classical fixed-step RK4 on the (4 + N)-state plant. The control is
/// recomputed at every stage from the stage state; the saturation
/// projection is applied after each full step. Aborts with status
/// aborted_divergent once the energy exceeds E_abort; a non-finite
/// state throws DivergenceError.
SimRecord integrate(const Scenario& sc);

/// Uncontrolled 4x4 plant matrix at the coefficients' airspeed.
std::array<std::array<double, 4>, 4> system_matrix(const ModalCoefficients& modal);

/// Eigenvalues of a dense real matrix (row-major, n x n). Residuals
/// ||A v - lambda v|| are verified below 1e-9 ||v||.
std::vector<std::complex<double>> eigenvalues(std::span<const double> a, int n);

/// Max real part of the uncontrolled plant spectrum at airspeed V.
double spectral_abscissa(const ModalCoefficients& modal_vfree, double V);

struct FlutterResult {
    double V_flat = 0.0;
    double alpha = 0.0;  // spectral abscissa at V_flat
    int iterations = 0;
};

/// Bisection on the spectral abscissa between a stable V_lo and an
/// unstable V_hi, refined until |alpha| < 1e-8. Throws ComputationError
/// when the bracket does not change sign.
FlutterResult find_flutter_speed(const WingParams& wing, const ModeShapes& modes, double V_lo,
                                 double V_hi);

struct FreqScanRow {
    double V = 0.0;
    std::complex<double> branch[2];  // continuity-tracked, Im >= 0 representatives
    bool flagged = false;            // ambiguous assignment near coincidence
};

/// Uncontrolled spectrum along an ascending airspeed grid, sorted into
/// two branches by nearest-neighbor continuation.
std::vector<FreqScanRow> frequency_scan(const WingParams& wing, const ModeShapes& modes,
                                        std::span<const double> V_grid);

/// Linear closed loop [x; beta] for the configured law (saturation
/// ignored), returned row-major with dimension 4 + N.
std::vector<double> closed_loop_matrix(const ModalCoefficients& modal,
                                       std::span<const FeatherCoeffs> feathers,
                                       const Topology& topo, const ControlConfig& cc,
                                       const GoalParams& gp, double V);

/// Damping-time and bound-holding metrics of a finished record. t_1
/// restricts the search to t >= t_1.
SuppressionMetrics metrics(const SimRecord& rec, const GoalParams& gp, double t_1 = 0.0);

enum class SweepAxis { V, gain, law, topology_k, feather_count };

SweepAxis sweep_axis_from_string(const std::string& s);
std::string to_string(SweepAxis axis);

struct SweepEntry {
    std::string value;
    bool failed = false;
    std::string error;  // set when failed
    SimRecord record;
    SuppressionMetrics metrics;
};

/// Independent scenario evaluations along one axis; results are ordered
/// by input value regardless of execution order, and a failing scenario
/// is recorded as a failed entry without stopping the sweep.
std::vector<SweepEntry> sweep(const Scenario& base, const GoalParams& goals, SweepAxis axis,
                              std::span<const std::string> values, int threads = 1);

}  // namespace flutterlab
