#pragma once

#include <array>
#include <span>
#include <vector>

#include "flutterlab/feather.hpp"
#include "flutterlab/topology.hpp"
#include "flutterlab/wing.hpp"

namespace flutterlab {

/// First-order form of the two-mode aeroelastic plant at a fixed
/// airspeed: x = (q, q_dot, r, r_dot) with
///   x1' = x2,  x2' = C1·x + sum_i (R1_i beta_i + s1_i u_i),
///   x3' = x4,  x4' = C2·x + sum_i (R2_i beta_i + s2_i u_i).
/// d holds the closed-form inverse of the inertia matrix
/// [[a11, b11], [a21, b21]].
struct StateSpace {
    double V = 0.0;
    std::array<double, 4> C1{};
    std::array<double, 4> C2{};
    InverseInertia d;
    std::vector<double> R1, R2, s1, s2;  // one column per feather

    int feather_count() const { return int(R1.size()); }
};

struct PlantState {
    double t = 0.0;
    std::array<double, 4> x{};
    std::vector<double> beta;
};

struct Derivative {
    std::array<double, 4> x{};
    std::vector<double> beta;
};

/// Goal thresholds and the topology-derived quadratic weights.
struct GoalParams {
    double chi = 0.0;      // bending weight, >= 0
    double lambda = 0.0;   // torsion weight, >= 0
    double E_star = 0.0;   // energy bound [J]
    double eps_star = 0.0; // target for the deviation functional L
    double eps_beta = 0.0; // feather-spread bound
    double eps_dstar = 0.0;// target for the extended functional, >= eps_star

    void validate() const;
};

/// Closed-form inverse of the inertia matrix. Throws ComputationError
/// when a11 b21 = a21 b11 (excluded by the wing's positive-definiteness
/// invariant).
InverseInertia invert_inertia(const ModalCoefficients& modal);

/// Assembles the first-order form at airspeed V from modal coefficients
/// evaluated at that same V.
StateSpace assemble(const ModalCoefficients& modal, std::span<const FeatherCoeffs> feathers,
                    double V);

/// Plant derivative at (state, u) using the assembled coefficients.
Derivative rhs(const StateSpace& ss, const PlantState& state, std::span<const double> u);

/// Independent route to the same derivative: evaluates the generalized
/// force and moment directly, then solves the 2x2 inertia system by
/// Gaussian elimination per call. Used to gate the assembled form.
Derivative rhs_oracle(const ModalCoefficients& modal, std::span<const FeatherCoeffs> feathers,
                      const PlantState& state, std::span<const double> u);

/// Total (kinetic + strain) energy of the modal state:
/// E = 1/2 a13 x1^2 + 1/2 a11 x2^2 - 1/2 b23_2 x3^2 - 1/2 b21 x4^2
///     - a21 x2 x4. Non-negative whenever a11 (-b21) > a21^2.
double total_energy(const ModalCoefficients& modal, const std::array<double, 4>& x);

/// True when the energy quadratic form is positive definite.
bool energy_positive_definite(const ModalCoefficients& modal);

/// Deviation-compensation functional
/// L = 1/2 [chi (x1^2 + x2^2) + lambda (x3^2 + x4^2)].
double goal_L(const std::array<double, 4>& x, const GoalParams& gp);

/// The same functional written as the pairwise sum
/// 1/2 sum_i sum_{j in N_i} w_ij ||(Phi_i - Phi_j) x||^2 over the
/// topology; kept for cross-checking against the closed form.
double goal_L_pairwise(const std::array<double, 4>& x, const Topology& topo,
                       const ModeShapes& modes, std::span<const FeatherSpec> feathers);

/// Feather disagreement sum_i sum_{j in N_i} w_ij (beta_i - beta_j)^2.
double disagreement(std::span<const double> beta, const Topology& topo);

/// Extended functional L + 1/2 * disagreement.
double goal_L_tilde(const std::array<double, 4>& x, std::span<const double> beta,
                    const Topology& topo, const GoalParams& gp);

/// Topology-derived weights chi = sum w_ij (f(z_i) - f(z_j))^2 and
/// lambda likewise with phi, over feather anchors.
std::pair<double, double> chi_lambda(const Topology& topo, const ModeShapes& modes,
                                     std::span<const FeatherSpec> feathers);

}  // namespace flutterlab
