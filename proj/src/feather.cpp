#include "flutterlab/feather.hpp"

#include <cmath>
#include <stdexcept>

#include "flutterlab/errors.hpp"
#include "flutterlab/quadrature.hpp"

namespace flutterlab {

std::string to_string(Side side) {
    return side == Side::lower ? "lower" : "upper";
}

Side side_from_string(const std::string& s) {
    if (s == "lower") return Side::lower;
    if (s == "upper") return Side::upper;
    throw ConfigError("side must be \"lower\" or \"upper\"");
}

void FeatherSpec::validate(const WingParams& wing, const std::string& where) const {
    if (!(z_lo >= 0.0 && z_lo < z_hi && z_hi <= wing.l))
        throw ConfigError("span extent must satisfy 0 <= z_lo < z_hi <= l", where + ".z_lo");
    const double bz = wing.b(z_anchor());
    if (!(x_star >= 0.0 && x_star < x_k && x_k <= bz))
        throw ConfigError("chord extent must satisfy 0 <= x_star < x_k <= b", where + ".x_star");
    if (side == Side::lower) {
        if (!(beta_min == 0.0 && beta_max > 0.0))
            throw ConfigError("lower-surface interval must be [0, beta_max] with beta_max > 0",
                              where + ".beta_min");
    } else {
        if (!(beta_max == 0.0 && beta_min < 0.0))
            throw ConfigError("upper-surface interval must be [beta_min, 0] with beta_min < 0",
                              where + ".beta_max");
    }
}

double chord_to_psi(double x, double b) {
    if (x < 0.0 || x > b) throw std::domain_error("chordwise station outside [0, b]");
    // clamp the argument against roundoff at the endpoints
    const double c = std::min(1.0, std::max(-1.0, 1.0 - 2.0 * x / b));
    return std::acos(c);
}

ShapeCoeffs shape_coeffs(double psi_star, double psi_k) {
    if (!(0.0 <= psi_star && psi_star <= psi_k && psi_k <= M_PI))
        throw std::domain_error("require 0 <= psi_star <= psi_k <= pi");

    const double dpsi = psi_k - psi_star;
    const double dsin = std::sin(psi_k) - std::sin(psi_star);
    const double dsin2 = std::sin(2.0 * psi_k) - std::sin(2.0 * psi_star);
    const double dsin3 = std::sin(3.0 * psi_k) - std::sin(3.0 * psi_star);
    const double cs = std::cos(psi_star);

    ShapeCoeffs sc;
    sc.G = (dpsi - dsin) / M_PI;
    sc.H = (cs * dpsi - dsin) / (2.0 * M_PI) - cs * dsin + 0.5 * (dpsi + 0.5 * dsin2);
    sc.I = (2.0 * dsin + dsin2) / 8.0;
    sc.J = -(-2.0 * cs * dsin + dpsi) / 16.0 - (0.5 - cs) * dsin2 / 16.0 -
           (dsin + dsin3 / 3.0) / 16.0;
    return sc;
}

StripCoeffs strip_from_shape(const ShapeCoeffs& sc, double b, double x0,
                             double Cy_alpha, double rho) {
    const double b2 = rho * b * b;
    const double b3 = rho * b * b * b;
    const double arm = x0 / b - 0.25;

    StripCoeffs out;
    out.A = Cy_alpha * sc.G * b2;
    out.B = Cy_alpha * sc.H * b3;
    out.C = -(sc.I + Cy_alpha * arm * sc.G) * b2;
    out.D = -(sc.J + Cy_alpha * arm * sc.H) * b3;
    return out;
}

StripCoeffs strip_coeffs(const WingParams& wing, const FeatherSpec& feather) {
    const double z = feather.z_anchor();
    const double b = wing.b(z);
    const double psi_star = chord_to_psi(feather.x_star, b);
    const double psi_k = chord_to_psi(feather.x_k, b);
    return strip_from_shape(shape_coeffs(psi_star, psi_k), b, wing.x0(z),
                            wing.Cy_alpha, wing.rho);
}

void feather_modal_coeffs(const StripCoeffs& strip, const FeatherSpec& feather,
                          const ModeShapes& modes, FeatherCoeffs& out) {
    if (feather.z_lo < 0.0 || feather.z_hi > modes.l || feather.z_lo > feather.z_hi)
        throw std::domain_error("feather strip outside the span");

    out.A = strip.A;
    out.B = strip.B;
    out.C = strip.C;
    out.D = strip.D;

    if (feather.z_hi == feather.z_lo) {
        out.A_bar = out.B_bar = out.C_bar = out.D_bar = 0.0;
        return;
    }

    const int n = 201;  // local Simpson grid on the strip
    const double f_int =
        simpson_fn([&](double z) { return modes.f_at(z); }, feather.z_lo, feather.z_hi, n);
    const double phi_int =
        simpson_fn([&](double z) { return modes.phi_at(z); }, feather.z_lo, feather.z_hi, n);

    out.A_bar = strip.A * f_int;
    out.B_bar = strip.B * f_int;
    out.C_bar = strip.C * phi_int;
    out.D_bar = strip.D * phi_int;
}

FeatherCoeffs compute_feather_coeffs(const WingParams& wing, const FeatherSpec& feather,
                                     const ModeShapes& modes) {
    const double z = feather.z_anchor();
    const double b = wing.b(z);
    const auto sc = shape_coeffs(chord_to_psi(feather.x_star, b), chord_to_psi(feather.x_k, b));
    FeatherCoeffs out;
    out.G = sc.G;
    out.H = sc.H;
    out.I = sc.I;
    out.J = sc.J;
    feather_modal_coeffs(strip_from_shape(sc, b, wing.x0(z), wing.Cy_alpha, wing.rho),
                         feather, modes, out);
    return out;
}

std::pair<double, double> feather_loads(const FeatherCoeffs& coeffs, double V,
                                        double beta, double beta_dot) {
    if (V < 0.0) throw std::domain_error("airspeed must be non-negative");
    return {coeffs.A * V * V * beta + coeffs.B * V * beta_dot,
            coeffs.C * V * V * beta + coeffs.D * V * beta_dot};
}

void attach_speed_terms(std::span<FeatherCoeffs> coeffs, const InverseInertia& d,
                        const ModalCoefficients& modal, double V) {
    for (auto& c : coeffs) {
        c.s1 = V * (c.B_bar * d.d11 + c.D_bar * d.d12);
        c.s2 = V * (c.B_bar * d.d21 + c.D_bar * d.d22);
        c.R1 = V * V * (c.A_bar * d.d11 + c.C_bar * d.d12);
        c.R2 = V * V * (c.A_bar * d.d21 + c.C_bar * d.d22);
        c.mu = modal.a11 * c.s1 - modal.a21() * c.s2;
        c.nu = -(modal.a21() * c.s1 + modal.b21 * c.s2);
    }
}

}  // namespace flutterlab
