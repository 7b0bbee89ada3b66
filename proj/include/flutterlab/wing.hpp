#pragma once

#include <utility>
#include <vector>

namespace flutterlab {

/// A structural or geometric property along the span: constant by
/// default, or a linearly interpolated table of (z, value) samples.
class SpanProfile {
public:
    SpanProfile() = default;
    SpanProfile(double constant) : constant_(constant) {}  // NOLINT: implicit by design

    static SpanProfile tabulated(std::vector<std::pair<double, double>> samples);

    bool is_tabulated() const { return !table_.empty(); }
    double operator()(double z) const;

    double constant_value() const { return constant_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }

private:
    double constant_ = 0.0;
    std::vector<std::pair<double, double>> table_;  // sorted by z, size >= 2
};

/// Spanwise constants of the cantilevered half-wing. All lengths in m,
/// masses in kg; sigma_T is positive when the gravity center lies aft
/// of the stiffness center.
struct WingParams {
    double l = 0.0;        // half-span
    SpanProfile b;         // chord
    SpanProfile x0;        // leading edge -> stiffness center
    SpanProfile sigma_T;   // stiffness center -> gravity center offset
    SpanProfile m;         // linear mass [kg/m]
    SpanProfile J_m;       // linear mass moment about the stiffness axis [kg m]
    SpanProfile EJ;        // bending stiffness [N m^2]
    SpanProfile GJ_K;      // torsional stiffness [N m^2]
    double Cy_alpha = 0.0; // lift-curve slope [1/rad]
    double rho = 0.0;      // air density [kg/m^3]

    /// Throws ConfigError naming the offending field. Tabulated
    /// properties are checked pointwise on a fine span grid, including
    /// the mass-matrix condition J_m > m sigma_T^2.
    void validate() const;
};

/// First cantilever bending mode f and first torsion mode phi,
/// tip-normalized (f(l) = phi(l) = 1), with closed-form evaluators for
/// every derivative the model needs plus sampled arrays on a uniform
/// span grid. The bending mode is
///   f(z) = C [cosh(k z) - cos(k z) - sigma (sinh(k z) - sin(k z))],
/// k = lambda/l with cosh(lambda) cos(lambda) = -1, and the torsion
/// mode is phi(z) = sin(pi z / (2 l)). Both satisfy the clamped-free
/// boundary conditions exactly.
struct ModeShapes {
    double l = 0.0;
    double lambda1 = 0.0;  // first root of cosh(x) cos(x) = -1
    double sigma = 0.0;    // (cosh l1 + cos l1) / (sinh l1 + sin l1)
    double scale = 1.0;    // tip normalization factor

    std::vector<double> grid;  // z_0 = 0 .. z_{n-1} = l, uniform
    std::vector<double> f;     // bending mode at grid
    std::vector<double> f2;    // f''
    std::vector<double> phi;   // torsion mode
    std::vector<double> phi1;  // phi'

    double f_at(double z) const;
    double f1_at(double z) const;
    double f2_at(double z) const;
    double f3_at(double z) const;
    double f4_at(double z) const;
    double phi_at(double z) const;
    double phi1_at(double z) const;
    double phi2_at(double z) const;

    double h() const { return grid.size() > 1 ? l / double(grid.size() - 1) : 0.0; }
};

/// Galerkin coefficients of the two-mode flexure/torsion system.
/// Velocity enters only through explicit powers, so the integrals are
/// stored with those powers factored out (`*_hat`); `V` selects the
/// evaluated view. a21 = -b11 holds exactly (one integral, negated).
struct ModalCoefficients {
    // velocity-independent
    double a11 = 0.0;    // ∫ m f^2            (> 0)
    double a13 = 0.0;    // ∫ EJ (f'')^2       (> 0)
    double b11 = 0.0;    // -∫ m sigma_T f phi
    double b21 = 0.0;    // -∫ J_m phi^2       (< 0)
    double b23_2 = 0.0;  // -∫ GJ_K (phi')^2   (< 0)

    // velocity factored out: a12 = V a12_hat, b13 = V^2 b13_hat, ...
    double a12_hat = 0.0;
    double b12_hat = 0.0;
    double b13_hat = 0.0;
    double a22_hat = 0.0;
    double b22_hat = 0.0;
    double b23_1_hat = 0.0;

    double V = 0.0;  // airspeed of the evaluated view

    double a21() const { return -b11; }
    double a12() const { return V * a12_hat; }
    double b12() const { return V * b12_hat; }
    double b13() const { return V * V * b13_hat; }
    double a22() const { return V * a22_hat; }
    double b22() const { return V * b22_hat; }
    double b23() const { return V * V * b23_1_hat + b23_2; }
};

/// Builds the analytic mode shapes on an odd uniform grid
/// (n_grid >= 201, Simpson-compatible). Throws ConfigError otherwise.
ModeShapes build_mode_shapes(const WingParams& wing, int n_grid);

/// All twelve Galerkin integrals by composite Simpson on the mode grid,
/// velocity powers factored out. Derivatives come from the closed
/// forms, never from finite differences.
ModalCoefficients modal_integrals(const WingParams& wing, const ModeShapes& modes);

/// Returns a view of the coefficients with the velocity powers applied.
/// Throws std::domain_error for V < 0.
ModalCoefficients evaluate_at_speed(const ModalCoefficients& coeffs, double V);

}  // namespace flutterlab
