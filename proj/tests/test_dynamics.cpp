#include <doctest.h>

#include <cmath>
#include <random>

#include "flutterlab/errors.hpp"
#include "flutterlab/state_space.hpp"
#include "test_util.hpp"

using namespace flutterlab;
using testutil::rel_err;
using testutil::trapz;

namespace {

struct Fixture {
    WingParams wing = testutil::reference_wing();
    ModeShapes modes = build_mode_shapes(wing, 1001);
    ModalCoefficients modal = modal_integrals(wing, modes);
    std::vector<FeatherSpec> specs = testutil::reference_feathers();
    std::vector<FeatherCoeffs> coeffs;

    Fixture() {
        for (const auto& f : specs) coeffs.push_back(compute_feather_coeffs(wing, f, modes));
    }
};

}  // namespace

TEST_CASE("inverse inertia factors reproduce the identity") {
    Fixture fx;
    const auto d = invert_inertia(fx.modal);
    const double a11 = fx.modal.a11, b11 = fx.modal.b11;
    const double a21 = fx.modal.a21(), b21 = fx.modal.b21;

    CHECK(rel_err(d.d11 * a11 + d.d12 * a21, 1.0) < 1e-12);
    CHECK(std::abs(d.d11 * b11 + d.d12 * b21) < 1e-12);
    CHECK(std::abs(d.d21 * a11 + d.d22 * a21) < 1e-12);
    CHECK(rel_err(d.d21 * b11 + d.d22 * b21, 1.0) < 1e-12);
}

TEST_CASE("vanishing mass offset makes the inverse inertia diagonal") {
    auto wing = testutil::reference_wing();
    wing.sigma_T = 0.0;
    const auto modal = modal_integrals(wing, build_mode_shapes(wing, 501));
    const auto d = invert_inertia(modal);
    CHECK(d.d12 == 0.0);
    CHECK(d.d21 == 0.0);
    CHECK(rel_err(d.d11, 1.0 / modal.a11) < 1e-14);
    CHECK(rel_err(d.d22, 1.0 / modal.b21) < 1e-14);
}

TEST_CASE("a singular inertia matrix is rejected") {
    ModalCoefficients m;
    m.a11 = 1.0;
    m.b11 = 2.0;
    m.b21 = -4.0;  // a11 b21 - b11 a21 = -4 + 4 = 0
    CHECK_THROWS_AS(invert_inertia(m), ComputationError);
}

TEST_CASE("assembled derivative matches the direct inertia solve") {
    Fixture fx;
    std::mt19937 rng(0xD1CE);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    double worst = 0.0;
    for (int draw = 0; draw < 1000; ++draw) {
        const double speeds[] = {0.0, 12.0, 24.0, 27.2, 40.0};
        const double V = speeds[draw % 5];
        const auto modal_v = evaluate_at_speed(fx.modal, V);
        const auto ss = assemble(modal_v, fx.coeffs, V);

        PlantState state;
        state.beta.resize(fx.coeffs.size());
        std::vector<double> u(fx.coeffs.size());
        for (auto& v : state.x) v = unit(rng);
        for (auto& v : state.beta) v = 0.35 * unit(rng);
        for (auto& v : u) v = unit(rng);

        const auto got = rhs(ss, state, u);
        const auto want = rhs_oracle(modal_v, fx.coeffs, state, u);
        double scale = 1e-300;
        for (double v : want.x) scale = std::max(scale, std::abs(v));
        for (int i = 0; i < 4; ++i)
            worst = std::max(worst, std::abs(got.x[i] - want.x[i]) / scale);
        for (std::size_t i = 0; i < u.size(); ++i) CHECK(got.beta[i] == u[i]);
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("derivative structure at rest and without feathers") {
    Fixture fx;
    const auto modal_v = evaluate_at_speed(fx.modal, 20.0);
    const auto ss = assemble(modal_v, fx.coeffs, 20.0);

    SUBCASE("origin is an equilibrium") {
        PlantState state;
        state.beta.assign(fx.coeffs.size(), 0.0);
        const std::vector<double> u(fx.coeffs.size(), 0.0);
        const auto d = rhs(ss, state, u);
        for (double v : d.x) CHECK(v == 0.0);
    }
    SUBCASE("neutral feathers reduce to the bare plant") {
        PlantState state;
        state.x = {0.3, -0.1, 0.05, 0.2};
        state.beta.assign(fx.coeffs.size(), 0.0);
        const std::vector<double> u(fx.coeffs.size(), 0.0);
        const auto with = rhs(ss, state, u);

        const auto bare_ss = assemble(modal_v, {}, 20.0);
        PlantState bare;
        bare.x = state.x;
        const auto without = rhs(bare_ss, bare, {});
        for (int i = 0; i < 4; ++i) CHECK(with.x[i] == without.x[i]);
    }
    SUBCASE("dimension mismatches are contract violations") {
        PlantState state;
        state.beta.assign(3, 0.0);
        const std::vector<double> u(fx.coeffs.size(), 0.0);
        CHECK_THROWS_AS((void)rhs(ss, state, u), std::invalid_argument);
    }
}

TEST_CASE("feather forcing superposes exactly") {
    Fixture fx;
    const auto modal_v = evaluate_at_speed(fx.modal, 13.6);

    std::mt19937 rng(0xF0);
    std::uniform_real_distribution<double> unit(-0.3, 0.3);
    PlantState rest;
    rest.beta.assign(fx.coeffs.size(), 0.0);

    for (int trial = 0; trial < 20; ++trial) {
        PlantState sa = rest, sb = rest, sum = rest;
        std::vector<double> ua(fx.coeffs.size()), ub(fx.coeffs.size()), usum(fx.coeffs.size());
        for (std::size_t i = 0; i < fx.coeffs.size(); ++i) {
            sa.beta[i] = unit(rng);
            sb.beta[i] = unit(rng);
            ua[i] = unit(rng);
            ub[i] = unit(rng);
            sum.beta[i] = sa.beta[i] + sb.beta[i];
            usum[i] = ua[i] + ub[i];
        }
        const auto da = rhs_oracle(modal_v, fx.coeffs, sa, ua);
        const auto db = rhs_oracle(modal_v, fx.coeffs, sb, ub);
        const auto dsum = rhs_oracle(modal_v, fx.coeffs, sum, usum);
        CHECK(rel_err(dsum.x[1], da.x[1] + db.x[1]) < 1e-12);
        CHECK(rel_err(dsum.x[3], da.x[3] + db.x[3]) < 1e-12);
    }
}

TEST_CASE("total energy quadratic form") {
    Fixture fx;

    SUBCASE("zero state carries no energy") {
        CHECK(total_energy(fx.modal, {0.0, 0.0, 0.0, 0.0}) == 0.0);
    }
    SUBCASE("pure bending rate") {
        const double v = 0.37;
        CHECK(rel_err(total_energy(fx.modal, {0.0, v, 0.0, 0.0}), 0.5 * fx.modal.a11 * v * v) <
              1e-15);
    }
    SUBCASE("matches the beam energy integrals at random states") {
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (int i = 0; i < 20; ++i) {
            std::array<double, 4> x;
            for (auto& v : x) v = unit(rng);
            // kinetic + strain energy of y1 = x1 f, Theta1 = x3 phi with
            // rates (x2, x4), integrated independently
            const auto& w = fx.wing;
            const auto& ms = fx.modes;
            const double oracle =
                0.5 * trapz([&](double z) { return w.m(z) * std::pow(x[1] * ms.f_at(z), 2); }, 0.0,
                            w.l, 20001) +
                0.5 * trapz([&](double z) { return w.J_m(z) * std::pow(x[3] * ms.phi_at(z), 2); },
                            0.0, w.l, 20001) -
                trapz([&](double z) {
                    return w.m(z) * w.sigma_T(z) * x[1] * ms.f_at(z) * x[3] * ms.phi_at(z);
                }, 0.0, w.l, 20001) +
                0.5 * trapz([&](double z) { return w.EJ(z) * std::pow(x[0] * ms.f2_at(z), 2); },
                            0.0, w.l, 20001) +
                0.5 * trapz([&](double z) { return w.GJ_K(z) * std::pow(x[2] * ms.phi1_at(z), 2); },
                            0.0, w.l, 20001);
            CHECK(rel_err(total_energy(fx.modal, x), oracle) < 1e-6);
        }
    }
}

TEST_CASE("energy positive definiteness") {
    Fixture fx;
    CHECK(energy_positive_definite(fx.modal));

    std::mt19937 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double lowest = 1e300;
    for (int i = 0; i < 10000; ++i) {
        std::array<double, 4> x;
        double norm = 0.0;
        for (auto& v : x) {
            v = gauss(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : x) v /= norm;
        lowest = std::min(lowest, total_energy(fx.modal, x));
    }
    CHECK(lowest > 0.0);

    SUBCASE("a coupling-dominated inertia fails the check") {
        ModalCoefficients bad;
        bad.a11 = 1.0;
        bad.a13 = 1.0;
        bad.b11 = -2.0;  // a21 = 2, a11 * (-b21) = 1 < a21^2
        bad.b21 = -1.0;
        bad.b23_2 = -1.0;
        CHECK_FALSE(energy_positive_definite(bad));
        const double s = 1.0 / std::sqrt(2.0);
        CHECK(total_energy(bad, {0.0, s, 0.0, s}) < 0.0);
    }
}

TEST_CASE("deviation functional closed form") {
    GoalParams gp;
    gp.chi = 0.7;
    gp.lambda = 0.3;

    CHECK(goal_L({0, 0, 0, 0}, gp) == 0.0);

    GoalParams degenerate;  // chi = lambda = 0 ignores every state
    CHECK(goal_L({3.0, -2.0, 1.0, 5.0}, degenerate) == 0.0);

    const std::array<double, 4> x{0.5, -1.0, 0.25, 2.0};
    CHECK(rel_err(goal_L(x, gp),
                  0.5 * (0.7 * (0.25 + 1.0) + 0.3 * (0.0625 + 4.0))) < 1e-15);
}

TEST_CASE("pairwise and closed forms of the deviation functional agree") {
    Fixture fx;
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    for (TopologyKind kind : {TopologyKind::ring, TopologyKind::complete, TopologyKind::grid}) {
        const auto topo = build_topology(fx.specs, kind, 2);
        auto [chi, lambda] = chi_lambda(topo, fx.modes, fx.specs);
        GoalParams gp;
        gp.chi = chi;
        gp.lambda = lambda;
        for (int i = 0; i < 50; ++i) {
            std::array<double, 4> x;
            for (auto& v : x) v = unit(rng);
            const double closed = goal_L(x, gp);
            const double pairwise = goal_L_pairwise(x, topo, fx.modes, fx.specs);
            CHECK(rel_err(closed, pairwise) < 1e-12);
        }
    }
}

TEST_CASE("extended functional adds the feather disagreement") {
    Fixture fx;
    const auto topo = build_topology(fx.specs, TopologyKind::complete, 2);
    auto [chi, lambda] = chi_lambda(topo, fx.modes, fx.specs);
    GoalParams gp;
    gp.chi = chi;
    gp.lambda = lambda;

    SUBCASE("equal deflections reduce to L") {
        const std::array<double, 4> x{0.1, 0.2, -0.3, 0.4};
        const std::vector<double> beta(8, 0.17);
        CHECK(goal_L_tilde(x, beta, topo, gp) == goal_L(x, gp));
    }
    SUBCASE("single deflected feather on a complete graph, by brute force") {
        std::vector<double> beta(8, 0.0);
        beta[0] = 0.3;
        double brute = 0.0;
        for (int i = 0; i < topo.N; ++i)
            for (int j = 0; j < topo.N; ++j)
                brute += topo.weight(i, j) * std::pow(beta[i] - beta[j], 2);
        brute *= 0.5;
        CHECK(rel_err(goal_L_tilde({0, 0, 0, 0}, beta, topo, gp), brute) < 1e-14);
    }
    SUBCASE("deflection vector must match the topology") {
        const std::vector<double> beta(5, 0.0);
        CHECK_THROWS_AS((void)goal_L_tilde({0, 0, 0, 0}, beta, topo, gp), std::invalid_argument);
    }
    SUBCASE("never below L") {
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> unit(-0.3, 0.3);
        for (int i = 0; i < 100; ++i) {
            std::array<double, 4> x;
            for (auto& v : x) v = unit(rng);
            std::vector<double> beta(8);
            for (auto& v : beta) v = unit(rng);
            CHECK(goal_L_tilde(x, beta, topo, gp) >= goal_L(x, gp));
        }
    }
}

TEST_CASE("topology weights map to the quadratic goal coefficients") {
    Fixture fx;

    SUBCASE("co-located anchors produce a degenerate goal") {
        auto specs = fx.specs;
        for (auto& f : specs) {
            f.z_lo = 2.0;
            f.z_hi = 3.0;
        }
        const auto topo = build_topology(specs, TopologyKind::complete, 2);
        auto [chi, lambda] = chi_lambda(topo, fx.modes, specs);
        CHECK(chi == doctest::Approx(0.0).scale(1.0).epsilon(1e-18));
        CHECK(lambda == doctest::Approx(0.0).scale(1.0).epsilon(1e-18));
    }
    SUBCASE("two feathers with unit weights double-count the squared difference") {
        std::vector<FeatherSpec> two(fx.specs.begin(), fx.specs.begin() + 2);
        const auto topo = build_topology(two, TopologyKind::complete, 2);
        CHECK(topo.weight(0, 1) == 1.0);
        auto [chi, lambda] = chi_lambda(topo, fx.modes, two);
        const double f1 = fx.modes.f_at(two[0].z_anchor());
        const double f2 = fx.modes.f_at(two[1].z_anchor());
        CHECK(rel_err(chi, 2.0 * (f1 - f2) * (f1 - f2)) < 1e-14);
    }
    SUBCASE("weights are non-negative quadratics") {
        const auto topo = build_topology(fx.specs, TopologyKind::grid, 2);
        auto [chi, lambda] = chi_lambda(topo, fx.modes, fx.specs);
        CHECK(chi >= 0.0);
        CHECK(lambda >= 0.0);
    }
}
