#include "flutterlab/control.hpp"

#include <stdexcept>

#include "flutterlab/errors.hpp"

namespace flutterlab {

std::string to_string(ControlLaw law) {
    switch (law) {
        case ControlLaw::off: return "off";
        case ControlLaw::A: return "A";
        case ControlLaw::B: return "B";
        case ControlLaw::C: return "C";
    }
    return "?";
}

ControlLaw control_law_from_string(const std::string& s) {
    if (s == "off") return ControlLaw::off;
    if (s == "A") return ControlLaw::A;
    if (s == "B") return ControlLaw::B;
    if (s == "C") return ControlLaw::C;
    throw ConfigError("law must be one of \"off\", \"A\", \"B\", \"C\"");
}

void ControlConfig::validate(int n_feathers) const {
    if (law == ControlLaw::off) return;
    if (int(gamma.size()) != n_feathers)
        throw ConfigError("need one gain per feather", "control.gamma");
    for (double g : gamma)
        if (!(g > 0.0)) throw ConfigError("gains must be strictly positive", "control.gamma");
}

AgentView agent_view(int i, const std::array<double, 4>& x, const ModeShapes& modes,
                     std::span<const FeatherSpec> feathers, const Topology& topo,
                     std::span<const double> beta) {
    if (i < 0 || i >= topo.N || int(beta.size()) != topo.N)
        throw std::invalid_argument("agent_view: index or dimension mismatch");
    AgentView v;
    v.id = i;
    const double fi = modes.f_at(feathers[i].z_anchor());
    const double pi_ = modes.phi_at(feathers[i].z_anchor());
    v.Phi = {fi, fi, pi_, pi_};
    for (int c = 0; c < 4; ++c) v.w[c] = v.Phi[c] * x[c];
    v.beta = beta[i];
    v.neighbors = topo.neighbors[i];
    for (int j : v.neighbors) v.neighbor_beta.push_back(beta[j]);
    return v;
}

std::vector<double> law_A(const std::array<double, 4>& x, std::span<const FeatherCoeffs> feathers,
                          std::span<const double> gamma) {
    if (gamma.size() != feathers.size())
        throw std::invalid_argument("law_A: gain/feather size mismatch");
    std::vector<double> u(feathers.size());
    for (std::size_t i = 0; i < feathers.size(); ++i)
        u[i] = -gamma[i] * (feathers[i].mu * x[0] + feathers[i].nu * x[2]);
    return u;
}

std::vector<double> law_B(const std::array<double, 4>& x, std::span<const FeatherCoeffs> feathers,
                          std::span<const double> gamma, const GoalParams& gp) {
    if (gamma.size() != feathers.size())
        throw std::invalid_argument("law_B: gain/feather size mismatch");
    std::vector<double> u(feathers.size());
    for (std::size_t i = 0; i < feathers.size(); ++i)
        u[i] = -gamma[i] * (gp.chi * feathers[i].s1 * x[0] + gp.lambda * feathers[i].s2 * x[2]);
    return u;
}

std::vector<double> law_C(const std::array<double, 4>& x, std::span<const double> beta,
                          const Topology& topo, std::span<const FeatherCoeffs> feathers,
                          std::span<const double> gamma, const GoalParams& gp,
                          bool position_form) {
    const std::size_t n = feathers.size();
    if (beta.size() != n || gamma.size() != n || topo.N != int(n))
        throw std::invalid_argument("law_C: dimension mismatch");
    const double xb = position_form ? x[0] : x[1];
    const double xt = position_form ? x[2] : x[3];
    std::vector<double> u(n);
    for (std::size_t p = 0; p < n; ++p) {
        double consensus = 0.0;
        for (int j : topo.neighbors[int(p)])
            consensus += topo.weight(int(p), j) * (beta[p] - beta[j]);
        u[p] = -gamma[p] * (gp.chi * feathers[p].s1 * xb + gp.lambda * feathers[p].s2 * xt) -
               2.0 * gamma[p] * consensus;
    }
    return u;
}

std::vector<double> sg_gradient(const std::array<double, 4>& x, std::span<const double> beta,
                                const Topology& topo, std::span<const FeatherCoeffs> feathers,
                                const GoalParams& gp) {
    const std::size_t n = feathers.size();
    if (beta.size() != n || topo.N != int(n))
        throw std::invalid_argument("sg_gradient: dimension mismatch");
    std::vector<double> g(n);
    for (std::size_t p = 0; p < n; ++p) {
        double consensus = 0.0;
        for (int j : topo.neighbors[int(p)])
            consensus += topo.weight(int(p), j) * (beta[p] - beta[j]);
        g[p] = gp.chi * feathers[p].s1 * x[1] + gp.lambda * feathers[p].s2 * x[3] +
               2.0 * consensus;
    }
    return g;
}

double dLtilde_dt(const StateSpace& ss, const std::array<double, 4>& x,
                  std::span<const double> beta, std::span<const double> u, const Topology& topo,
                  const GoalParams& gp) {
    PlantState state;
    state.x = x;
    state.beta.assign(beta.begin(), beta.end());
    const auto d = rhs(ss, state, u);

    double rate = gp.chi * (x[0] * x[1] + x[1] * d.x[1]) +
                  gp.lambda * (x[2] * x[3] + x[3] * d.x[3]);
    for (int i = 0; i < topo.N; ++i)
        for (int j : topo.neighbors[i])
            rate += topo.weight(i, j) * (beta[i] - beta[j]) * (u[i] - u[j]);
    return rate;
}

void saturate(std::span<const double> beta, std::span<double> u,
              std::span<const FeatherSpec> feathers) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (beta[i] >= feathers[i].beta_max && u[i] > 0.0) u[i] = 0.0;
        if (beta[i] <= feathers[i].beta_min && u[i] < 0.0) u[i] = 0.0;
    }
}

void clamp_to_limits(std::span<double> beta, std::span<const FeatherSpec> feathers) {
    for (std::size_t i = 0; i < beta.size(); ++i) {
        if (beta[i] > feathers[i].beta_max) beta[i] = feathers[i].beta_max;
        if (beta[i] < feathers[i].beta_min) beta[i] = feathers[i].beta_min;
    }
}

std::vector<double> eval_control(const ControlConfig& cc, const std::array<double, 4>& x,
                                 std::span<const double> beta, const Topology& topo,
                                 std::span<const FeatherCoeffs> feathers,
                                 std::span<const FeatherSpec> specs, const GoalParams& gp) {
    std::vector<double> u;
    switch (cc.law) {
        case ControlLaw::off:
            u.assign(feathers.size(), 0.0);
            break;
        case ControlLaw::A:
            u = law_A(x, feathers, cc.gamma);
            break;
        case ControlLaw::B:
            u = law_B(x, feathers, cc.gamma, gp);
            break;
        case ControlLaw::C:
            u = law_C(x, beta, topo, feathers, cc.gamma, gp, cc.law_c_position_form);
            break;
    }
    if (cc.saturation) saturate(beta, u, specs);
    return u;
}

}  // namespace flutterlab
