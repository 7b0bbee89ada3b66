#include "flutterlab/state_space.hpp"

#include <cmath>
#include <stdexcept>

#include "flutterlab/errors.hpp"

namespace flutterlab {

void GoalParams::validate() const {
    if (chi < 0.0 || lambda < 0.0)
        throw ConfigError("chi and lambda must be non-negative", "goals");
    if (!(E_star > 0.0)) throw ConfigError("must be strictly positive", "goals.E_star");
    if (!(eps_star > 0.0)) throw ConfigError("must be strictly positive", "goals.eps_star");
    if (!(eps_beta > 0.0)) throw ConfigError("must be strictly positive", "goals.eps_beta");
    if (!(eps_dstar > 0.0)) throw ConfigError("must be strictly positive", "goals.eps_dstar");
    if (eps_dstar < eps_star)
        throw ConfigError("extended target must not be tighter than eps_star", "goals.eps_dstar");
}

InverseInertia invert_inertia(const ModalCoefficients& modal) {
    const double a11 = modal.a11, b11 = modal.b11;
    const double a21 = modal.a21(), b21 = modal.b21;
    const double det = a11 * b21 - b11 * a21;
    const double scale = std::abs(a11 * b21) + std::abs(b11 * a21);
    if (det == 0.0 || std::abs(det) < 1e-14 * scale)
        throw ComputationError("singular inertia matrix (a11 b21 = a21 b11)");
    return {b21 / det, -b11 / det, -a21 / det, a11 / det};
}

StateSpace assemble(const ModalCoefficients& modal, std::span<const FeatherCoeffs> feathers,
                    double V) {
    if (V < 0.0) throw std::domain_error("airspeed must be non-negative");

    const auto d = invert_inertia(modal);
    const double a12 = modal.a12(), a13 = modal.a13, a22 = modal.a22();
    const double b12 = modal.b12(), b13 = modal.b13(), b22 = modal.b22(), b23 = modal.b23();

    StateSpace ss;
    ss.V = V;
    ss.d = d;
    ss.C1 = {-d.d11 * a13,
             -(d.d11 * a12 + d.d12 * a22),
             -(d.d11 * b13 + d.d12 * b23),
             -(d.d11 * b12 + d.d12 * b22)};
    ss.C2 = {-d.d21 * a13,
             -(d.d21 * a12 + d.d22 * a22),
             -(d.d21 * b13 + d.d22 * b23),
             -(d.d21 * b12 + d.d22 * b22)};

    ss.R1.reserve(feathers.size());
    for (const auto& c : feathers) {
        ss.R1.push_back(V * V * (c.A_bar * d.d11 + c.C_bar * d.d12));
        ss.R2.push_back(V * V * (c.A_bar * d.d21 + c.C_bar * d.d22));
        ss.s1.push_back(V * (c.B_bar * d.d11 + c.D_bar * d.d12));
        ss.s2.push_back(V * (c.B_bar * d.d21 + c.D_bar * d.d22));
    }
    return ss;
}

Derivative rhs(const StateSpace& ss, const PlantState& state, std::span<const double> u) {
    const std::size_t n = ss.R1.size();
    if (state.beta.size() != n || u.size() != n)
        throw std::invalid_argument("rhs: feather dimension mismatch");

    const auto& x = state.x;
    double f1 = 0.0, f2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        f1 += ss.R1[i] * state.beta[i] + ss.s1[i] * u[i];
        f2 += ss.R2[i] * state.beta[i] + ss.s2[i] * u[i];
    }

    Derivative d;
    d.x[0] = x[1];
    d.x[1] = ss.C1[0] * x[0] + ss.C1[1] * x[1] + ss.C1[2] * x[2] + ss.C1[3] * x[3] + f1;
    d.x[2] = x[3];
    d.x[3] = ss.C2[0] * x[0] + ss.C2[1] * x[1] + ss.C2[2] * x[2] + ss.C2[3] * x[3] + f2;
    d.beta.assign(u.begin(), u.end());
    return d;
}

Derivative rhs_oracle(const ModalCoefficients& modal, std::span<const FeatherCoeffs> feathers,
                      const PlantState& state, std::span<const double> u) {
    const std::size_t n = feathers.size();
    if (state.beta.size() != n || u.size() != n)
        throw std::invalid_argument("rhs_oracle: feather dimension mismatch");

    const double V = modal.V;
    double Q = 0.0, M = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Q += feathers[i].A_bar * V * V * state.beta[i] + feathers[i].B_bar * V * u[i];
        M += feathers[i].C_bar * V * V * state.beta[i] + feathers[i].D_bar * V * u[i];
    }

    const auto& x = state.x;
    const double g1 =
        Q - modal.a12() * x[1] - modal.a13 * x[0] - modal.b12() * x[3] - modal.b13() * x[2];
    const double g2 = M - modal.a22() * x[1] - modal.b22() * x[3] - modal.b23() * x[2];

    // Gaussian elimination on [[a11, b11], [a21, b21]] (q'', r'')^T = (g1, g2)^T
    double m11 = modal.a11, m12 = modal.b11, r1 = g1;
    double m21 = modal.a21(), m22 = modal.b21, r2 = g2;
    if (std::abs(m21) > std::abs(m11)) {
        std::swap(m11, m21);
        std::swap(m12, m22);
        std::swap(r1, r2);
    }
    if (m11 == 0.0) throw ComputationError("singular inertia matrix");
    const double factor = m21 / m11;
    const double m22e = m22 - factor * m12;
    if (m22e == 0.0) throw ComputationError("singular inertia matrix");
    const double r_acc = (r2 - factor * r1) / m22e;
    const double q_acc = (r1 - m12 * r_acc) / m11;

    Derivative d;
    d.x[0] = x[1];
    d.x[1] = q_acc;
    d.x[2] = x[3];
    d.x[3] = r_acc;
    d.beta.assign(u.begin(), u.end());
    return d;
}

double total_energy(const ModalCoefficients& modal, const std::array<double, 4>& x) {
    return 0.5 * modal.a13 * x[0] * x[0] + 0.5 * modal.a11 * x[1] * x[1] -
           0.5 * modal.b23_2 * x[2] * x[2] - 0.5 * modal.b21 * x[3] * x[3] -
           modal.a21() * x[1] * x[3];
}

bool energy_positive_definite(const ModalCoefficients& modal) {
    // kinetic block [[a11, -a21], [-a21, -b21]] plus the two strain terms
    return modal.a11 > 0.0 && -modal.b21 > 0.0 &&
           modal.a11 * (-modal.b21) > modal.a21() * modal.a21() && modal.a13 > 0.0 &&
           -modal.b23_2 > 0.0;
}

double goal_L(const std::array<double, 4>& x, const GoalParams& gp) {
    return 0.5 * (gp.chi * (x[0] * x[0] + x[1] * x[1]) +
                  gp.lambda * (x[2] * x[2] + x[3] * x[3]));
}

double goal_L_pairwise(const std::array<double, 4>& x, const Topology& topo,
                       const ModeShapes& modes, std::span<const FeatherSpec> feathers) {
    if (int(feathers.size()) != topo.N)
        throw std::invalid_argument("goal_L_pairwise: feather/topology size mismatch");
    double sum = 0.0;
    for (int i = 0; i < topo.N; ++i) {
        for (int j : topo.neighbors[i]) {
            const double fij =
                modes.f_at(feathers[i].z_anchor()) - modes.f_at(feathers[j].z_anchor());
            const double pij =
                modes.phi_at(feathers[i].z_anchor()) - modes.phi_at(feathers[j].z_anchor());
            sum += topo.weight(i, j) * (fij * fij * (x[0] * x[0] + x[1] * x[1]) +
                                        pij * pij * (x[2] * x[2] + x[3] * x[3]));
        }
    }
    return 0.5 * sum;
}

double disagreement(std::span<const double> beta, const Topology& topo) {
    if (int(beta.size()) != topo.N)
        throw std::invalid_argument("disagreement: beta/topology size mismatch");
    double sum = 0.0;
    for (int i = 0; i < topo.N; ++i)
        for (int j : topo.neighbors[i]) {
            const double diff = beta[i] - beta[j];
            sum += topo.weight(i, j) * diff * diff;
        }
    return sum;
}

double goal_L_tilde(const std::array<double, 4>& x, std::span<const double> beta,
                    const Topology& topo, const GoalParams& gp) {
    return goal_L(x, gp) + 0.5 * disagreement(beta, topo);
}

std::pair<double, double> chi_lambda(const Topology& topo, const ModeShapes& modes,
                                     std::span<const FeatherSpec> feathers) {
    if (int(feathers.size()) != topo.N)
        throw std::invalid_argument("chi_lambda: feather/topology size mismatch");
    double chi = 0.0, lambda = 0.0;
    for (int i = 0; i < topo.N; ++i) {
        const double fi = modes.f_at(feathers[i].z_anchor());
        const double pi_ = modes.phi_at(feathers[i].z_anchor());
        for (int j : topo.neighbors[i]) {
            const double fij = fi - modes.f_at(feathers[j].z_anchor());
            const double pij = pi_ - modes.phi_at(feathers[j].z_anchor());
            chi += topo.weight(i, j) * fij * fij;
            lambda += topo.weight(i, j) * pij * pij;
        }
    }
    return {chi, lambda};
}

}  // namespace flutterlab
