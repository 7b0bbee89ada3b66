#include "flutterlab/wing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flutterlab/errors.hpp"
#include "flutterlab/quadrature.hpp"

namespace flutterlab {

SpanProfile SpanProfile::tabulated(std::vector<std::pair<double, double>> samples) {
    if (samples.size() < 2)
        throw ConfigError("tabulated profile needs at least two samples");
    std::sort(samples.begin(), samples.end());
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i].first == samples[i - 1].first)
            throw ConfigError("tabulated profile has duplicate span stations");
    SpanProfile p;
    p.table_ = std::move(samples);
    return p;
}

double SpanProfile::operator()(double z) const {
    if (table_.empty()) return constant_;
    if (z <= table_.front().first) return table_.front().second;
    if (z >= table_.back().first) return table_.back().second;
    auto it = std::upper_bound(table_.begin(), table_.end(), z,
                               [](double v, const auto& s) { return v < s.first; });
    const auto& [z1, v1] = *it;
    const auto& [z0, v0] = *(it - 1);
    const double w = (z - z0) / (z1 - z0);
    return v0 + w * (v1 - v0);
}

namespace {

void check_positive(double v, const char* field) {
    if (!(v > 0.0)) throw ConfigError("must be strictly positive", std::string("wing.") + field);
}

}  // namespace

void WingParams::validate() const {
    check_positive(l, "l");
    check_positive(Cy_alpha, "Cy_alpha");
    check_positive(rho, "rho");

    // Pointwise checks; 257 stations resolve any reasonable table.
    const int n_check = 257;
    for (int i = 0; i < n_check; ++i) {
        const double z = l * double(i) / double(n_check - 1);
        const double bz = b(z);
        if (!(bz > 0.0)) throw ConfigError("must be strictly positive along the span", "wing.b");
        if (!(m(z) > 0.0)) throw ConfigError("must be strictly positive along the span", "wing.m");
        if (!(J_m(z) > 0.0)) throw ConfigError("must be strictly positive along the span", "wing.J_m");
        if (!(EJ(z) > 0.0)) throw ConfigError("must be strictly positive along the span", "wing.EJ");
        if (!(GJ_K(z) > 0.0)) throw ConfigError("must be strictly positive along the span", "wing.GJ_K");
        if (!(x0(z) > 0.0 && x0(z) < bz))
            throw ConfigError("stiffness center must lie inside the chord (0 < x0 < b)", "wing.x0");
        if (!(std::abs(sigma_T(z)) < bz))
            throw ConfigError("|sigma_T| must be smaller than the chord", "wing.sigma_T");
        if (!(J_m(z) > m(z) * sigma_T(z) * sigma_T(z)))
            throw ConfigError("mass matrix not positive definite (J_m <= m sigma_T^2)", "wing.J_m");
    }
}

namespace {

// First root of cosh(x) cos(x) = -1 by bisection; the bracket [1.5, 2.5]
// contains exactly one root.
double first_bending_root() {
    auto g = [](double x) { return std::cosh(x) * std::cos(x) + 1.0; };
    double lo = 1.5, hi = 2.5;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(lo) * g(mid) <= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double ModeShapes::f_at(double z) const {
    const double s = lambda1 / l * z;
    return scale * (std::cosh(s) - std::cos(s) - sigma * (std::sinh(s) - std::sin(s)));
}

double ModeShapes::f1_at(double z) const {
    const double k = lambda1 / l, s = k * z;
    return scale * k * (std::sinh(s) + std::sin(s) - sigma * (std::cosh(s) - std::cos(s)));
}

double ModeShapes::f2_at(double z) const {
    const double k = lambda1 / l, s = k * z;
    return scale * k * k * (std::cosh(s) + std::cos(s) - sigma * (std::sinh(s) + std::sin(s)));
}

double ModeShapes::f3_at(double z) const {
    const double k = lambda1 / l, s = k * z;
    return scale * k * k * k * (std::sinh(s) - std::sin(s) - sigma * (std::cosh(s) + std::cos(s)));
}

double ModeShapes::f4_at(double z) const {
    const double k = lambda1 / l;
    return k * k * k * k * f_at(z);  // the mode is an eigenfunction of d^4/dz^4
}

double ModeShapes::phi_at(double z) const {
    return std::sin(0.5 * M_PI * z / l);
}

double ModeShapes::phi1_at(double z) const {
    const double k = 0.5 * M_PI / l;
    return k * std::cos(k * z);
}

double ModeShapes::phi2_at(double z) const {
    const double k = 0.5 * M_PI / l;
    return -k * k * std::sin(k * z);
}

ModeShapes build_mode_shapes(const WingParams& wing, int n_grid) {
    wing.validate();
    if (n_grid < 201 || n_grid % 2 == 0)
        throw ConfigError("n_grid must be odd and >= 201", "wing.n_grid");

    ModeShapes ms;
    ms.l = wing.l;
    ms.lambda1 = first_bending_root();
    ms.sigma = (std::cosh(ms.lambda1) + std::cos(ms.lambda1)) /
               (std::sinh(ms.lambda1) + std::sin(ms.lambda1));
    ms.scale = 1.0;
    ms.scale = 1.0 / ms.f_at(wing.l);  // tip-unit normalization

    ms.grid.resize(n_grid);
    ms.f.resize(n_grid);
    ms.f2.resize(n_grid);
    ms.phi.resize(n_grid);
    ms.phi1.resize(n_grid);
    for (int i = 0; i < n_grid; ++i) {
        const double z = wing.l * double(i) / double(n_grid - 1);
        ms.grid[i] = z;
        ms.f[i] = ms.f_at(z);
        ms.f2[i] = ms.f2_at(z);
        ms.phi[i] = ms.phi_at(z);
        ms.phi1[i] = ms.phi1_at(z);
    }
    return ms;
}

ModalCoefficients modal_integrals(const WingParams& wing, const ModeShapes& modes) {
    const std::size_t n = modes.grid.size();
    const double h = modes.h();

    std::vector<double> y(n);
    auto integral = [&](auto&& integrand) {
        for (std::size_t i = 0; i < n; ++i) integrand(i, modes.grid[i]);
        return simpson(y, h);
    };

    const double ca = wing.Cy_alpha;
    const double rho = wing.rho;

    ModalCoefficients c;

    c.a11 = integral([&](std::size_t i, double z) { y[i] = wing.m(z) * modes.f[i] * modes.f[i]; });
    c.a13 = integral([&](std::size_t i, double z) { y[i] = wing.EJ(z) * modes.f2[i] * modes.f2[i]; });

    // One integral serves both cross-inertia entries: a21 = -b11.
    const double ms_coupling = integral(
        [&](std::size_t i, double z) { y[i] = wing.m(z) * wing.sigma_T(z) * modes.f[i] * modes.phi[i]; });
    c.b11 = -ms_coupling;

    c.b21 = -integral([&](std::size_t i, double z) { y[i] = wing.J_m(z) * modes.phi[i] * modes.phi[i]; });
    c.b23_2 = -integral([&](std::size_t i, double z) { y[i] = wing.GJ_K(z) * modes.phi1[i] * modes.phi1[i]; });

    c.a12_hat = ca * rho *
        integral([&](std::size_t i, double z) { y[i] = wing.b(z) * modes.f[i] * modes.f[i]; });
    c.b12_hat = -ca * rho * integral([&](std::size_t i, double z) {
        y[i] = (0.75 * wing.b(z) - wing.x0(z)) * wing.b(z) * modes.f[i] * modes.phi[i];
    });
    c.b13_hat = -ca * rho *
        integral([&](std::size_t i, double z) { y[i] = wing.b(z) * modes.f[i] * modes.phi[i]; });
    c.a22_hat = -ca * rho * integral([&](std::size_t i, double z) {
        y[i] = (wing.x0(z) - 0.25 * wing.b(z)) * wing.b(z) * modes.f[i] * modes.phi[i];
    });
    c.b22_hat = -(M_PI / 16.0) * rho * integral([&](std::size_t i, double z) {
        const double bz = wing.b(z);
        y[i] = bz * bz * bz * modes.phi[i] * modes.phi[i];
    });
    c.b22_hat += ca * rho * integral([&](std::size_t i, double z) {
        const double bz = wing.b(z);
        y[i] = bz * (wing.x0(z) - 0.25 * bz) * (0.75 * bz - wing.x0(z)) * modes.phi[i] * modes.phi[i];
    });
    c.b23_1_hat = ca * rho * integral([&](std::size_t i, double z) {
        y[i] = wing.b(z) * (wing.x0(z) - 0.25 * wing.b(z)) * modes.phi[i] * modes.phi[i];
    });

    c.V = 0.0;
    return c;
}

ModalCoefficients evaluate_at_speed(const ModalCoefficients& coeffs, double V) {
    if (V < 0.0) throw std::domain_error("airspeed must be non-negative");
    ModalCoefficients out = coeffs;
    out.V = V;
    return out;
}

}  // namespace flutterlab
