#include <doctest.h>

#include <cmath>

#include "flutterlab/errors.hpp"
#include "flutterlab/wing.hpp"
#include "test_util.hpp"

using namespace flutterlab;
using testutil::rel_err;
using testutil::trapz;

namespace {

// Oracle: first root of cosh(x) cos(x) = -1, bisected independently of
// the library.
double bending_root_oracle() {
    auto g = [](double x) { return std::cosh(x) * std::cos(x) + 1.0; };
    double lo = 1.5, hi = 2.5;
    while (hi - lo > 1e-14) {
        const double mid = 0.5 * (lo + hi);
        (g(lo) * g(mid) <= 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("bending mode eigenvalue matches the bisection oracle") {
    const auto wing = testutil::reference_wing();
    const auto modes = build_mode_shapes(wing, 201);
    const double lambda = bending_root_oracle();
    CHECK(lambda == doctest::Approx(1.8751040687).epsilon(1e-9));
    CHECK(rel_err(modes.lambda1, lambda) < 1e-12);
}

TEST_CASE("mode shapes satisfy the clamped-free boundary conditions") {
    const auto wing = testutil::reference_wing();
    const auto modes = build_mode_shapes(wing, 201);
    const double l = wing.l;

    CHECK(std::abs(modes.f_at(0.0)) < 1e-8);
    CHECK(std::abs(modes.f1_at(0.0)) < 1e-8);
    CHECK(std::abs(modes.phi_at(0.0)) < 1e-8);
    CHECK(std::abs(modes.f2_at(l)) < 1e-8);
    CHECK(std::abs(modes.f3_at(l)) < 1e-8);
    CHECK(std::abs(modes.phi1_at(l)) < 1e-8);

    // tip-unit normalization
    CHECK(modes.f_at(l) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(modes.phi_at(l) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("torsion mode endpoints") {
    const auto wing = testutil::reference_wing();
    const auto modes = build_mode_shapes(wing, 201);
    CHECK(modes.phi_at(0.0) == 0.0);
    CHECK(std::abs(modes.phi1_at(wing.l)) < 1e-16);
}

TEST_CASE("grid construction is validated") {
    const auto wing = testutil::reference_wing();
    CHECK_THROWS_AS(build_mode_shapes(wing, 200), ConfigError);
    CHECK_THROWS_AS(build_mode_shapes(wing, 199), ConfigError);
    CHECK_NOTHROW(build_mode_shapes(wing, 201));
}

TEST_CASE("wing parameter invariants are enforced") {
    auto wing = testutil::reference_wing();

    SUBCASE("stiffness center outside the chord") {
        wing.x0 = 1.5;
        try {
            wing.validate();
            FAIL("expected a validation error");
        } catch (const ConfigError& e) {
            CHECK(e.path() == "wing.x0");
        }
    }
    SUBCASE("mass matrix loses definiteness") {
        wing.sigma_T = 0.4;  // J_m = 0.625 < 7.5 * 0.16
        CHECK_THROWS_AS(wing.validate(), ConfigError);
    }
    SUBCASE("negative density") {
        wing.rho = -1.0;
        CHECK_THROWS_AS(wing.validate(), ConfigError);
    }
}

TEST_CASE("modal integral signs and exact couplings") {
    const auto wing = testutil::reference_wing();
    const auto modes = build_mode_shapes(wing, 1001);
    const auto modal = modal_integrals(wing, modes);

    CHECK(modal.a11 > 0.0);
    CHECK(modal.a13 > 0.0);
    CHECK(modal.b21 < 0.0);
    CHECK(modal.b23_2 < 0.0);
    CHECK(modal.a21() == -modal.b11);  // one integral, negated

    SUBCASE("no center-of-gravity offset kills the inertial coupling") {
        auto w0 = wing;
        w0.sigma_T = 0.0;
        const auto m0 = modal_integrals(w0, build_mode_shapes(w0, 1001));
        CHECK(m0.b11 == 0.0);
        CHECK(m0.a21() == 0.0);
    }
}

TEST_CASE("torsional strain integral has the analytic value") {
    // constant GJ with phi = sin(pi z / 2l) integrates to GJ pi^2 / (8 l)
    const auto wing = testutil::reference_wing();
    const auto modes = build_mode_shapes(wing, 1001);
    const auto modal = modal_integrals(wing, modes);
    const double gj = wing.GJ_K(0.0);
    const double expected = -gj * M_PI * M_PI / (8.0 * wing.l);
    CHECK(rel_err(modal.b23_2, expected) < 1e-9);
}

TEST_CASE("bending strain integral equals the strong-form projection") {
    const auto wing = testutil::reference_wing();
    const auto modes = build_mode_shapes(wing, 1001);
    const auto modal = modal_integrals(wing, modes);

    // independent route: project (EJ f'')'' = EJ f'''' on f by trapezoid
    const double strong = trapz(
        [&](double z) { return wing.EJ(z) * modes.f4_at(z) * modes.f_at(z); }, 0.0, wing.l);
    CHECK(rel_err(modal.a13, strong) < 1e-6);

    const double torsion_strong = trapz(
        [&](double z) { return wing.GJ_K(z) * modes.phi2_at(z) * modes.phi_at(z); }, 0.0, wing.l);
    CHECK(rel_err(modal.b23_2, torsion_strong) < 1e-6);
}

TEST_CASE("speed evaluation applies the stated velocity powers") {
    const auto wing = testutil::reference_wing();
    const auto modes = build_mode_shapes(wing, 501);
    const auto modal = modal_integrals(wing, modes);

    SUBCASE("at rest every aerodynamic coefficient vanishes") {
        const auto v0 = evaluate_at_speed(modal, 0.0);
        CHECK(v0.a12() == 0.0);
        CHECK(v0.b12() == 0.0);
        CHECK(v0.b13() == 0.0);
        CHECK(v0.a22() == 0.0);
        CHECK(v0.b22() == 0.0);
        CHECK(v0.b23() == modal.b23_2);
    }
    SUBCASE("linear and quadratic scaling") {
        const auto v1 = evaluate_at_speed(modal, 17.0);
        const auto v2 = evaluate_at_speed(modal, 34.0);
        CHECK(rel_err(v2.a12(), 2.0 * v1.a12()) < 1e-15);
        CHECK(rel_err(v2.b13(), 4.0 * v1.b13()) < 1e-15);
    }
    SUBCASE("negative airspeed is rejected") {
        CHECK_THROWS_AS(evaluate_at_speed(modal, -1.0), std::domain_error);
    }
}

TEST_CASE("evaluated coefficients match direct substitution of V into the integrands") {
    const auto wing = testutil::reference_wing();
    const auto modes = build_mode_shapes(wing, 1001);
    const double V = 50.0;
    const auto at_v = evaluate_at_speed(modal_integrals(wing, modes), V);

    const double ca = wing.Cy_alpha, rho = wing.rho;
    auto b = [&](double z) { return wing.b(z); };
    auto x0 = [&](double z) { return wing.x0(z); };
    auto f = [&](double z) { return modes.f_at(z); };
    auto phi = [&](double z) { return modes.phi_at(z); };

    const double a12 = ca * rho * V * trapz([&](double z) { return b(z) * f(z) * f(z); }, 0.0, wing.l);
    const double b12 = -ca * rho * V *
        trapz([&](double z) { return (0.75 * b(z) - x0(z)) * b(z) * f(z) * phi(z); }, 0.0, wing.l);
    const double b13 =
        -ca * rho * V * V * trapz([&](double z) { return b(z) * f(z) * phi(z); }, 0.0, wing.l);
    const double a22 = -ca * rho * V *
        trapz([&](double z) { return (x0(z) - 0.25 * b(z)) * b(z) * f(z) * phi(z); }, 0.0, wing.l);
    const double b22 = -(M_PI / 16.0) * rho * V *
            trapz([&](double z) { return std::pow(b(z), 3) * phi(z) * phi(z); }, 0.0, wing.l) +
        ca * rho * V *
            trapz([&](double z) {
                return b(z) * (x0(z) - 0.25 * b(z)) * (0.75 * b(z) - x0(z)) * phi(z) * phi(z);
            }, 0.0, wing.l);
    const double b23_1 = ca * rho * V * V *
        trapz([&](double z) { return b(z) * (x0(z) - 0.25 * b(z)) * phi(z) * phi(z); }, 0.0, wing.l);

    CHECK(rel_err(at_v.a12(), a12) < 1e-8);
    CHECK(rel_err(at_v.b12(), b12) < 1e-8);
    CHECK(rel_err(at_v.b13(), b13) < 1e-8);
    CHECK(rel_err(at_v.a22(), a22) < 1e-8);
    CHECK(rel_err(at_v.b22(), b22) < 1e-8);
    CHECK(rel_err(at_v.b23() - at_v.b23_2, b23_1) < 1e-8);
}

TEST_CASE("Simpson integrals converge at fourth order") {
    const auto wing = testutil::reference_wing();
    const auto coarse = modal_integrals(wing, build_mode_shapes(wing, 251));
    const auto medium = modal_integrals(wing, build_mode_shapes(wing, 501));
    const auto fine = modal_integrals(wing, build_mode_shapes(wing, 2001));

    auto fields = [](const ModalCoefficients& m) {
        return std::vector<double>{m.a11, m.a13, m.b11, m.b21, m.b23_2, m.a12_hat,
                                   m.b12_hat, m.b13_hat, m.a22_hat, m.b22_hat, m.b23_1_hat};
    };
    const auto fc = fields(coarse), fm = fields(medium), ff = fields(fine);
    for (std::size_t i = 0; i < fc.size(); ++i) {
        const double ec = std::abs(fc[i] - ff[i]);
        const double em = std::abs(fm[i] - ff[i]);
        if (ec < 1e-13 * std::abs(ff[i])) continue;  // already at roundoff
        CHECK(ec / em >= 8.0);                       // order >= 3 observed
    }
}

TEST_CASE("tabulated span properties interpolate and integrate") {
    auto wing = testutil::reference_wing();
    wing.m = SpanProfile::tabulated({{0.0, 7.5}, {6.0, 7.5}});
    CHECK(wing.m(3.3) == doctest::Approx(7.5));

    const auto modes = build_mode_shapes(wing, 501);
    const auto tab = modal_integrals(wing, modes);
    auto constant = testutil::reference_wing();
    const auto ref = modal_integrals(constant, build_mode_shapes(constant, 501));
    CHECK(rel_err(tab.a11, ref.a11) < 1e-12);

    SUBCASE("linear taper interpolates midpoints") {
        const auto taper = SpanProfile::tabulated({{0.0, 2.0}, {6.0, 1.0}});
        CHECK(taper(3.0) == doctest::Approx(1.5));
        CHECK(taper(0.0) == doctest::Approx(2.0));
        CHECK(taper(6.0) == doctest::Approx(1.0));
    }
    SUBCASE("degenerate tables are rejected") {
        CHECK_THROWS_AS(SpanProfile::tabulated({{0.0, 1.0}}), ConfigError);
        CHECK_THROWS_AS(SpanProfile::tabulated({{0.0, 1.0}, {0.0, 2.0}}), ConfigError);
    }
}
