#include "flutterlab/simulation.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "flutterlab/errors.hpp"

namespace flutterlab {

double VProfile::at(double t) const {
    if (kind == Kind::constant) return V0;
    if (t <= 0.0) return V0;
    if (t >= t_ramp) return V1;
    return V0 + (V1 - V0) * (t / t_ramp);
}

void Scenario::validate() const {
    wing.validate();
    if (!(dt > 0.0)) throw ConfigError("must be strictly positive", "scenario.dt");
    if (!(T > dt)) throw ConfigError("horizon must exceed one step", "scenario.T");
    if (output_stride < 1) throw ConfigError("must be >= 1", "scenario.output_stride");
    if (!(E_abort > 0.0)) throw ConfigError("must be strictly positive", "scenario.E_abort");
    if (v_profile.V0 < 0.0 || v_profile.V1 < 0.0)
        throw ConfigError("airspeed must be non-negative", "scenario.V");
    if (v_profile.kind == VProfile::Kind::ramp && !(v_profile.t_ramp > 0.0))
        throw ConfigError("ramp duration must be positive", "scenario.V.t_ramp");
    if (!beta0.empty() && beta0.size() != feathers.size())
        throw ConfigError("needs one entry per feather", "scenario.beta0");
    control.validate(int(feathers.size()));
    if ((control.law == ControlLaw::B || control.law == ControlLaw::C) &&
        topo.N != int(feathers.size()))
        throw ConfigError("laws B and C need a topology over all feathers", "topology");
}

namespace {

struct Stepper {
    const Scenario& sc;
    ModalCoefficients modal_vfree;
    std::vector<FeatherCoeffs> coeffs;
    GoalParams gp;  // only chi/lambda are consumed here
    ModalCoefficients modal_v;
    StateSpace ss;
    double assembled_V = -1.0;

    explicit Stepper(const Scenario& scenario) : sc(scenario) {
        modal_vfree = modal_integrals(sc.wing, sc.modes);
        coeffs.reserve(sc.feathers.size());
        for (const auto& f : sc.feathers)
            coeffs.push_back(compute_feather_coeffs(sc.wing, f, sc.modes));
        if (sc.topo.N == int(sc.feathers.size()) && sc.topo.N >= 2) {
            auto [chi, lambda] = chi_lambda(sc.topo, sc.modes, sc.feathers);
            gp.chi = chi;
            gp.lambda = lambda;
        }
        assemble_at(sc.v_profile.at(0.0));
    }

    void assemble_at(double V) {
        modal_v = evaluate_at_speed(modal_vfree, V);
        ss = assemble(modal_v, coeffs, V);
        attach_speed_terms(coeffs, ss.d, modal_v, V);
        assembled_V = V;
    }

    void maybe_reassemble(double t) {
        if (sc.v_profile.kind == VProfile::Kind::constant) return;
        const double V = sc.v_profile.at(t);
        if (sc.reassemble_dv <= 0.0 || std::abs(V - assembled_V) > sc.reassemble_dv)
            assemble_at(V);
    }

    std::vector<double> control(const std::array<double, 4>& x,
                                std::span<const double> beta) const {
        return eval_control(sc.control, x, beta, sc.topo, coeffs, sc.feathers, gp);
    }

    Derivative derivative(const PlantState& state) const {
        const auto u = control(state.x, state.beta);
        return rhs(ss, state, u);
    }
};

bool all_finite(const PlantState& s) {
    for (double v : s.x)
        if (!std::isfinite(v)) return false;
    for (double v : s.beta)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

SimRecord integrate(const Scenario& sc) {
    sc.validate();
    Stepper st(sc);

    const int n = int(sc.feathers.size());
    const long n_steps = long(std::floor(sc.T / sc.dt + 1e-9));

    PlantState state;
    state.t = 0.0;
    state.x = sc.x0;
    state.beta = sc.beta0.empty() ? std::vector<double>(n, 0.0) : sc.beta0;

    SimRecord rec;
    rec.n_feathers = n;
    rec.status = SimRecord::Status::completed;

    auto record_row = [&](const PlantState& s) {
        rec.t.push_back(s.t);
        rec.x.push_back(s.x);
        rec.beta.push_back(s.beta);
        rec.u.push_back(st.control(s.x, s.beta));
        rec.E.push_back(total_energy(st.modal_vfree, s.x));
        rec.L.push_back(goal_L(s.x, st.gp));
        rec.L_tilde.push_back(sc.topo.N == n && n >= 2 ? goal_L_tilde(s.x, s.beta, sc.topo, st.gp)
                                                       : goal_L(s.x, st.gp));
    };

    auto add_scaled = [n](const PlantState& s, const Derivative& d, double h) {
        PlantState out = s;
        for (int i = 0; i < 4; ++i) out.x[i] = s.x[i] + h * d.x[i];
        for (int i = 0; i < n; ++i) out.beta[i] = s.beta[i] + h * d.beta[i];
        return out;
    };

    for (long step = 0; step <= n_steps; ++step) {
        if (!all_finite(state))
            throw DivergenceError("non-finite state encountered", step, state.t);

        const double energy = total_energy(st.modal_vfree, state.x);
        if (step % sc.output_stride == 0) record_row(state);
        if (energy > sc.E_abort) {
            rec.status = SimRecord::Status::aborted_divergent;
            rec.end_time = state.t;
            return rec;
        }
        if (step == n_steps) break;

        st.maybe_reassemble(state.t);

        const auto k1 = st.derivative(state);
        auto s2 = add_scaled(state, k1, 0.5 * sc.dt);
        s2.t = state.t + 0.5 * sc.dt;
        const auto k2 = st.derivative(s2);
        auto s3 = add_scaled(state, k2, 0.5 * sc.dt);
        s3.t = state.t + 0.5 * sc.dt;
        const auto k3 = st.derivative(s3);
        auto s4 = add_scaled(state, k3, sc.dt);
        s4.t = state.t + sc.dt;
        const auto k4 = st.derivative(s4);

        const double w = sc.dt / 6.0;
        for (int i = 0; i < 4; ++i)
            state.x[i] += w * (k1.x[i] + 2.0 * k2.x[i] + 2.0 * k3.x[i] + k4.x[i]);
        for (int i = 0; i < n; ++i)
            state.beta[i] += w * (k1.beta[i] + 2.0 * k2.beta[i] + 2.0 * k3.beta[i] + k4.beta[i]);
        if (sc.control.saturation) clamp_to_limits(state.beta, sc.feathers);
        state.t = double(step + 1) * sc.dt;
    }

    rec.end_time = state.t;
    return rec;
}

std::array<std::array<double, 4>, 4> system_matrix(const ModalCoefficients& modal) {
    const auto ss = assemble(modal, {}, modal.V);
    return {{{0.0, 1.0, 0.0, 0.0},
             {ss.C1[0], ss.C1[1], ss.C1[2], ss.C1[3]},
             {0.0, 0.0, 0.0, 1.0},
             {ss.C2[0], ss.C2[1], ss.C2[2], ss.C2[3]}}};
}

std::vector<std::complex<double>> eigenvalues(std::span<const double> a, int n) {
    if (int(a.size()) != n * n) throw std::invalid_argument("eigenvalues: bad dimension");
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = a[std::size_t(i) * n + j];

    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success)
        throw ComputationError("dense eigenvalue solver failed to converge");

    const auto& vals = solver.eigenvalues();
    const auto& vecs = solver.eigenvectors();
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXcd v = vecs.col(i);
        const double residual = (m.cast<std::complex<double>>() * v - vals[i] * v).norm();
        if (residual > 1e-9 * v.norm() * std::max(1.0, m.norm()))
            throw ComputationError("eigenvalue residual exceeds tolerance");
    }

    std::vector<std::complex<double>> out(n);
    for (int i = 0; i < n; ++i) out[i] = vals[i];
    // deterministic order: by real part, then imaginary
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });
    return out;
}

namespace {

std::vector<std::complex<double>> plant_spectrum(const ModalCoefficients& modal_vfree, double V) {
    const auto A = system_matrix(evaluate_at_speed(modal_vfree, V));
    std::vector<double> flat;
    flat.reserve(16);
    for (const auto& row : A)
        for (double v : row) flat.push_back(v);
    return eigenvalues(flat, 4);
}

}  // namespace

double spectral_abscissa(const ModalCoefficients& modal_vfree, double V) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& ev : plant_spectrum(modal_vfree, V)) worst = std::max(worst, ev.real());
    return worst;
}

FlutterResult find_flutter_speed(const WingParams& wing, const ModeShapes& modes, double V_lo,
                                 double V_hi) {
    if (!(0.0 <= V_lo && V_lo < V_hi))
        throw ConfigError("need 0 <= V_lo < V_hi", "flutter_bracket");
    const auto modal = modal_integrals(wing, modes);

    double alpha_lo = spectral_abscissa(modal, V_lo);
    double alpha_hi = spectral_abscissa(modal, V_hi);
    if (!(alpha_lo < 0.0))
        throw ComputationError("bracket error: plant is not stable at V_lo");
    if (!(alpha_hi > 0.0))
        throw ComputationError("bracket error: plant is not unstable at V_hi");

    FlutterResult res;
    double lo = V_lo, hi = V_hi;
    double mid = 0.5 * (lo + hi);
    double alpha_mid = spectral_abscissa(modal, mid);
    int it = 0;
    while (std::abs(alpha_mid) >= 1e-8 && hi - lo > 16.0 * std::numeric_limits<double>::epsilon() * hi &&
           it < 200) {
        if (alpha_mid > 0.0)
            hi = mid;
        else
            lo = mid;
        mid = 0.5 * (lo + hi);
        alpha_mid = spectral_abscissa(modal, mid);
        ++it;
    }
    res.V_flat = mid;
    res.alpha = alpha_mid;
    res.iterations = it;
    return res;
}

std::vector<FreqScanRow> frequency_scan(const WingParams& wing, const ModeShapes& modes,
                                        std::span<const double> V_grid) {
    for (std::size_t i = 1; i < V_grid.size(); ++i)
        if (!(V_grid[i] > V_grid[i - 1]))
            throw ConfigError("airspeed grid must be ascending", "freq_scan");

    const auto modal = modal_integrals(wing, modes);
    std::vector<FreqScanRow> rows;
    rows.reserve(V_grid.size());

    for (double V : V_grid) {
        const auto spec = plant_spectrum(modal, V);

        // pick the two upper-half-plane representatives of the conjugate pairs
        std::vector<std::complex<double>> reps;
        for (const auto& ev : spec)
            if (ev.imag() > 0.0) reps.push_back(ev);
        FreqScanRow row;
        row.V = V;
        if (reps.size() != 2) {
            // degenerate spectrum (real eigenvalues present); keep the two
            // largest-real upper-half-plane eigenvalues and flag the row
            std::vector<std::complex<double>> upper;
            for (const auto& ev : spec)
                if (ev.imag() >= 0.0) upper.push_back(ev);
            std::sort(upper.begin(), upper.end(),
                      [](const auto& a, const auto& b) { return a.real() > b.real(); });
            row.branch[0] = upper.size() > 0 ? upper[0] : 0.0;
            row.branch[1] = upper.size() > 1 ? upper[1] : 0.0;
            row.flagged = true;
            rows.push_back(row);
            continue;
        }

        if (rows.empty() || rows.back().flagged) {
            // start (or restart after a degenerate row) ordered by frequency
            if (std::abs(reps[0].imag()) > std::abs(reps[1].imag()))
                std::swap(reps[0], reps[1]);
            row.branch[0] = reps[0];
            row.branch[1] = reps[1];
        } else {
            // nearest-neighbor continuation from the previous row
            const auto& prev = rows.back();
            const double direct =
                std::abs(reps[0] - prev.branch[0]) + std::abs(reps[1] - prev.branch[1]);
            const double swapped =
                std::abs(reps[1] - prev.branch[0]) + std::abs(reps[0] - prev.branch[1]);
            if (swapped < direct) std::swap(reps[0], reps[1]);
            row.branch[0] = reps[0];
            row.branch[1] = reps[1];
            const double margin = std::abs(direct - swapped);
            const double scale = std::abs(reps[0]) + std::abs(reps[1]);
            if (margin < 1e-9 * std::max(1.0, scale)) row.flagged = true;
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> closed_loop_matrix(const ModalCoefficients& modal,
                                       std::span<const FeatherCoeffs> feathers,
                                       const Topology& topo, const ControlConfig& cc,
                                       const GoalParams& gp, double V) {
    const int n = int(feathers.size());
    const int dim = 4 + n;
    const auto modal_v = evaluate_at_speed(modal, V);
    const auto ss = assemble(modal_v, feathers, V);

    std::vector<FeatherCoeffs> with_speed(feathers.begin(), feathers.end());
    attach_speed_terms(with_speed, ss.d, modal_v, V);

    // u = Kx x + Kb beta, law-dependent
    std::vector<double> Kx(std::size_t(n) * 4, 0.0);
    std::vector<double> Kb(std::size_t(n) * n, 0.0);
    for (int p = 0; p < n; ++p) {
        const auto& c = with_speed[p];
        const double g = cc.law == ControlLaw::off ? 0.0 : cc.gamma[p];
        switch (cc.law) {
            case ControlLaw::off:
                break;
            case ControlLaw::A:
                Kx[std::size_t(p) * 4 + 0] = -g * c.mu;
                Kx[std::size_t(p) * 4 + 2] = -g * c.nu;
                break;
            case ControlLaw::B:
                Kx[std::size_t(p) * 4 + 0] = -g * gp.chi * c.s1;
                Kx[std::size_t(p) * 4 + 2] = -g * gp.lambda * c.s2;
                break;
            case ControlLaw::C: {
                const int pos = cc.law_c_position_form ? 0 : 1;
                Kx[std::size_t(p) * 4 + pos] = -g * gp.chi * c.s1;
                Kx[std::size_t(p) * 4 + pos + 2] = -g * gp.lambda * c.s2;
                double row_sum = 0.0;
                for (int j : topo.neighbors[p]) {
                    Kb[std::size_t(p) * n + j] += 2.0 * g * topo.weight(p, j);
                    row_sum += topo.weight(p, j);
                }
                Kb[std::size_t(p) * n + p] -= 2.0 * g * row_sum;
                break;
            }
        }
    }

    std::vector<double> A(std::size_t(dim) * dim, 0.0);
    auto at = [&](int i, int j) -> double& { return A[std::size_t(i) * dim + j]; };

    at(0, 1) = 1.0;
    at(2, 3) = 1.0;
    for (int j = 0; j < 4; ++j) {
        at(1, j) = ss.C1[j];
        at(3, j) = ss.C2[j];
    }
    for (int i = 0; i < n; ++i) {
        at(1, 4 + i) += ss.R1[i];
        at(3, 4 + i) += ss.R2[i];
        for (int j = 0; j < 4; ++j) {
            at(1, j) += ss.s1[i] * Kx[std::size_t(i) * 4 + j];
            at(3, j) += ss.s2[i] * Kx[std::size_t(i) * 4 + j];
        }
        for (int j = 0; j < n; ++j) {
            at(1, 4 + j) += ss.s1[i] * Kb[std::size_t(i) * n + j];
            at(3, 4 + j) += ss.s2[i] * Kb[std::size_t(i) * n + j];
        }
        for (int j = 0; j < 4; ++j) at(4 + i, j) = Kx[std::size_t(i) * 4 + j];
        for (int j = 0; j < n; ++j) at(4 + i, 4 + j) = Kb[std::size_t(i) * n + j];
    }
    return A;
}

SuppressionMetrics metrics(const SimRecord& rec, const GoalParams& gp, double t_1) {
    SuppressionMetrics out;
    out.horizon = rec.end_time;
    if (rec.t.empty()) return out;

    out.E_max = *std::max_element(rec.E.begin(), rec.E.end());

    if (rec.status == SimRecord::Status::completed) {
        // last index from which E stays within the bound through T
        std::optional<std::size_t> first_held;
        for (std::size_t i = rec.t.size(); i-- > 0;) {
            if (rec.E[i] <= gp.E_star)
                first_held = i;
            else
                break;
        }
        if (first_held && rec.t[*first_held] < t_1) {
            // restrict to t >= t_1
            std::size_t i = *first_held;
            while (i < rec.t.size() && rec.t[i] < t_1) ++i;
            first_held = i < rec.t.size() ? std::optional<std::size_t>(i) : std::nullopt;
        }
        if (first_held) {
            out.t_damp = rec.t[*first_held];
            out.hold = true;
            out.L_ok = true;
            out.Ltilde_ok = true;
            for (std::size_t i = *first_held; i < rec.t.size(); ++i) {
                if (rec.L[i] > gp.eps_star) out.L_ok = false;
                if (rec.L_tilde[i] > gp.eps_dstar) out.Ltilde_ok = false;
            }
        }
    }
    return out;
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "V") return SweepAxis::V;
    if (s == "gain") return SweepAxis::gain;
    if (s == "law") return SweepAxis::law;
    if (s == "topology-k") return SweepAxis::topology_k;
    if (s == "N") return SweepAxis::feather_count;
    throw ConfigError("sweep axis must be one of V, gain, law, topology-k, N", "sweep.axis");
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::V: return "V";
        case SweepAxis::gain: return "gain";
        case SweepAxis::law: return "law";
        case SweepAxis::topology_k: return "topology-k";
        case SweepAxis::feather_count: return "N";
    }
    return "?";
}

namespace {

// Re-tiles each surface's covered span into equal strips, keeping the
// chordwise extent and deflection limits of that surface's first strip.
std::vector<FeatherSpec> retile_feathers(const std::vector<FeatherSpec>& base, int count) {
    if (count < 2 || count % 2 != 0)
        throw ConfigError("feather-count sweep needs an even N >= 2", "sweep.values");
    std::vector<FeatherSpec> out;
    int next_id = 1;
    for (Side side : {Side::lower, Side::upper}) {
        std::vector<const FeatherSpec*> same;
        for (const auto& f : base)
            if (f.side == side) same.push_back(&f);
        if (same.empty()) throw ConfigError("feather-count sweep needs both surfaces covered");
        double lo = same.front()->z_lo, hi = same.front()->z_hi;
        for (const auto* f : same) {
            lo = std::min(lo, f->z_lo);
            hi = std::max(hi, f->z_hi);
        }
        const int per_side = count / 2;
        for (int i = 0; i < per_side; ++i) {
            FeatherSpec f = *same.front();
            f.id = next_id++;
            f.z_lo = lo + (hi - lo) * double(i) / per_side;
            f.z_hi = lo + (hi - lo) * double(i + 1) / per_side;
            out.push_back(f);
        }
    }
    return out;
}

Scenario apply_sweep_value(const Scenario& base, SweepAxis axis, const std::string& value) {
    Scenario sc = base;
    switch (axis) {
        case SweepAxis::V:
            sc.v_profile.kind = VProfile::Kind::constant;
            sc.v_profile.V0 = std::stod(value);
            break;
        case SweepAxis::gain:
            sc.control.gamma.assign(sc.feathers.size(), std::stod(value));
            break;
        case SweepAxis::law:
            sc.control.law = control_law_from_string(value);
            break;
        case SweepAxis::topology_k:
            sc.topo_k = std::stoi(value);
            sc.topo = build_topology(sc.feathers, sc.topo_kind, sc.topo_k);
            break;
        case SweepAxis::feather_count: {
            const int n = std::stoi(value);
            sc.feathers = retile_feathers(base.feathers, n);
            sc.topo = build_topology(sc.feathers, sc.topo_kind,
                                     std::min(sc.topo_k, n % 2 == 0 ? n - 2 : n - 1));
            const double g = base.control.gamma.empty() ? 1.0 : base.control.gamma.front();
            sc.control.gamma.assign(sc.feathers.size(), g);
            if (!sc.beta0.empty()) sc.beta0.assign(sc.feathers.size(), 0.0);
            break;
        }
    }
    return sc;
}

}  // namespace

std::vector<SweepEntry> sweep(const Scenario& base, const GoalParams& goals, SweepAxis axis,
                              std::span<const std::string> values, int threads) {
    std::vector<SweepEntry> entries(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) entries[i].value = values[i];

    auto run_one = [&](std::size_t i) {
        try {
            const Scenario sc = apply_sweep_value(base, axis, entries[i].value);
            entries[i].record = integrate(sc);
            entries[i].metrics = metrics(entries[i].record, goals, sc.t_1);
        } catch (const std::exception& e) {
            entries[i].failed = true;
            entries[i].error = e.what();
        }
    };

    if (threads <= 1 || values.size() <= 1) {
        for (std::size_t i = 0; i < values.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        const int actual = int(std::min<std::size_t>(std::size_t(threads), values.size()));
        for (int t = 0; t < actual; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < values.size(); i = next.fetch_add(1))
                    run_one(i);
            });
        for (auto& th : pool) th.join();
    }
    return entries;
}

}  // namespace flutterlab
