#pragma once

#include <span>
#include <string>
#include <vector>

#include "flutterlab/wing.hpp"

namespace flutterlab {

enum class Side { lower, upper };

std::string to_string(Side side);
Side side_from_string(const std::string& s);

/// One actuator strip. Deflection angles are positive when they locally
/// increase the angle of attack, so lower-surface feathers admit
/// [0, beta_max] and upper-surface feathers [beta_min, 0]; identical
/// load formulas apply to both sides with the sign carried entirely by
/// the admissible interval.
struct FeatherSpec {
    int id = 0;
    Side side = Side::lower;
    double z_lo = 0.0, z_hi = 0.0;      // spanwise strip extent
    double x_star = 0.0, x_k = 0.0;     // chordwise edges from the wing leading edge
    double beta_min = 0.0, beta_max = 0.0;

    double z_anchor() const { return 0.5 * (z_lo + z_hi); }
    double x_anchor() const { return 0.5 * (x_star + x_k); }

    /// Throws ConfigError with the offending field path prefixed by `where`.
    void validate(const WingParams& wing, const std::string& where) const;
};

/// Aerodynamic influence of one feather: thin-airfoil shape
/// coefficients, strip force/moment coefficients, their projections on
/// the modes, and (once an airspeed is attached) the first-order-form
/// input columns and the deviation-feedback coefficients.
struct FeatherCoeffs {
    double G = 0.0, H = 0.0, I = 0.0, J = 0.0;          // dimensionless shape
    double A = 0.0, B = 0.0, C = 0.0, D = 0.0;          // strip force/moment
    double A_bar = 0.0, B_bar = 0.0, C_bar = 0.0, D_bar = 0.0;  // modal integrals

    // filled by attach_speed_terms at a given airspeed
    double s1 = 0.0, s2 = 0.0;  // velocity-gain input columns [1/s per rad/s]
    double R1 = 0.0, R2 = 0.0;  // deflection input columns [1/s^2 per rad]
    double mu = 0.0, nu = 0.0;  // energy-gradient feedback coefficients
};

struct ShapeCoeffs {
    double G = 0.0, H = 0.0, I = 0.0, J = 0.0;
};

struct StripCoeffs {
    double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
};

/// Chordwise station to the thin-airfoil angle variable:
/// psi = arccos(1 - 2 x / b), in [0, pi]. Throws std::domain_error for
/// x outside [0, b].
double chord_to_psi(double x, double b);

/// Closed-form shape coefficients for a flap element spanning
/// [psi_star, psi_k], 0 <= psi_star <= psi_k <= pi. A degenerate
/// element (psi_star == psi_k) yields all zeros.
ShapeCoeffs shape_coeffs(double psi_star, double psi_k);

/// Strip force/moment coefficients from the shape coefficients and the
/// local chord geometry. Factored out of strip_coeffs so the formula
/// can be exercised with hand-set shape values.
StripCoeffs strip_from_shape(const ShapeCoeffs& sc, double b, double x0,
                             double Cy_alpha, double rho);

/// Strip coefficients of a feather. Chord and stiffness-center offset
/// are taken at the feather's span anchor.
StripCoeffs strip_coeffs(const WingParams& wing, const FeatherSpec& feather);

/// Projects the strip coefficients on the modes over the feather's own
/// span extent: A_bar = A ∫ f dz over [z_lo, z_hi], and likewise B_bar
/// with f, C_bar and D_bar with phi. Throws std::domain_error if the
/// strip lies outside the span.
void feather_modal_coeffs(const StripCoeffs& strip, const FeatherSpec& feather,
                          const ModeShapes& modes, FeatherCoeffs& out);

/// Full per-feather pipeline: shape -> strip -> modal integrals.
FeatherCoeffs compute_feather_coeffs(const WingParams& wing, const FeatherSpec& feather,
                                     const ModeShapes& modes);

/// Linear force and moment per unit span produced by one feather:
/// q_u = A V^2 beta + B V beta_dot, m_u = C V^2 beta + D V beta_dot.
std::pair<double, double> feather_loads(const FeatherCoeffs& coeffs, double V,
                                        double beta, double beta_dot);

struct InverseInertia {
    double d11 = 0.0, d12 = 0.0, d21 = 0.0, d22 = 0.0;
};

/// Fills s1/s2, R1/R2 and the deviation-feedback coefficients mu/nu at
/// airspeed V: s1 = V (B_bar d11 + D_bar d12), R1 = V^2 (A_bar d11 +
/// C_bar d12), second row with (d21, d22); mu = a11 s1 - a21 s2,
/// nu = -(a21 s1 + b21 s2).
void attach_speed_terms(std::span<FeatherCoeffs> coeffs, const InverseInertia& d,
                        const ModalCoefficients& modal, double V);

}  // namespace flutterlab
