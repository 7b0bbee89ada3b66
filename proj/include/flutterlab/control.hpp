#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "flutterlab/state_space.hpp"

namespace flutterlab {

enum class ControlLaw { off, A, B, C };

std::string to_string(ControlLaw law);
ControlLaw control_law_from_string(const std::string& s);

struct ControlConfig {
    ControlLaw law = ControlLaw::off;
    std::vector<double> gamma;  // one positive gain per feather
    bool saturation = true;
    bool law_c_position_form = false;  // drive law C by positions instead of rates

    void validate(int n_feathers) const;
};

/// What one agent sees: its mode-sampling diagonal, its local deviation
/// w = Phi x, and its own plus neighbor deflections.
struct AgentView {
    int id = 0;
    std::array<double, 4> Phi{};  // diag {f(z_i), f(z_i), phi(z_i), phi(z_i)}
    std::array<double, 4> w{};    // Phi x
    double beta = 0.0;
    std::vector<int> neighbors;
    std::vector<double> neighbor_beta;
};

AgentView agent_view(int i, const std::array<double, 4>& x, const ModeShapes& modes,
                     std::span<const FeatherSpec> feathers, const Topology& topo,
                     std::span<const double> beta);

/// Deviation feedback with constant coefficients:
/// u_i = -gamma_i (mu_i x1 + nu_i x3). Requires speed terms attached to
/// the feather coefficients at the scenario airspeed.
std::vector<double> law_A(const std::array<double, 4>& x, std::span<const FeatherCoeffs> feathers,
                          std::span<const double> gamma);

/// Per-mode separated deviation feedback:
/// u_p = -gamma_p (chi s1_p x1 + lambda s2_p x3).
std::vector<double> law_B(const std::array<double, 4>& x, std::span<const FeatherCoeffs> feathers,
                          std::span<const double> gamma, const GoalParams& gp);

/// Multi-agent proportional speed-gradient law:
/// u_p = -gamma_p (chi s1_p x2 + lambda s2_p x4)
///       - 2 gamma_p sum_{j in N_p} w_pj (beta_p - beta_j).
/// With position_form the first term is driven by (x1, x3) instead.
std::vector<double> law_C(const std::array<double, 4>& x, std::span<const double> beta,
                          const Topology& topo, std::span<const FeatherCoeffs> feathers,
                          std::span<const double> gamma, const GoalParams& gp,
                          bool position_form = false);

/// Analytic gradient of d/dt of the extended functional with respect to
/// u: g_p = chi s1_p x2 + lambda s2_p x4 + 2 sum_j w_pj (beta_p - beta_j).
std::vector<double> sg_gradient(const std::array<double, 4>& x, std::span<const double> beta,
                                const Topology& topo, std::span<const FeatherCoeffs> feathers,
                                const GoalParams& gp);

/// d/dt of the extended functional along the plant flow at control u.
/// Affine in u with gradient sg_gradient; the verification suites rely
/// on the exact identity
///   dLtilde_dt(u_C) = dLtilde_dt(0) - sum_p gamma_p g_p^2.
double dLtilde_dt(const StateSpace& ss, const std::array<double, 4>& x,
                  std::span<const double> beta, std::span<const double> u, const Topology& topo,
                  const GoalParams& gp);

/// Boundary projection: zeroes any control component that points out of
/// its feather's admissible interval while the deflection sits at the
/// bound.
void saturate(std::span<const double> beta, std::span<double> u,
              std::span<const FeatherSpec> feathers);

/// Clamps deflections into their admissible intervals (applied after
/// each full integrator step).
void clamp_to_limits(std::span<double> beta, std::span<const FeatherSpec> feathers);

/// Dispatches the configured law (law `off` returns zeros) and applies
/// the saturation projection when enabled.
std::vector<double> eval_control(const ControlConfig& cc, const std::array<double, 4>& x,
                                 std::span<const double> beta, const Topology& topo,
                                 std::span<const FeatherCoeffs> feathers,
                                 std::span<const FeatherSpec> specs, const GoalParams& gp);

}  // namespace flutterlab
