#pragma once
// Equation families ∂_t u = A u + ν u u_x on 2π-periodic mean-zero fields,
// and their pseudospectral integration. The stepper is classical RK4 in the
// interaction variable v_k(t) = e^{-iψ(k)t} u_k(t) (integrating factor), so
// the linear flow is integrated exactly and the step size is limited only by
// the nonlinear scale. Trajectories store v; u is reconstructed on demand.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dispersive/common.hpp"
#include "dispersive/field.hpp"
#include "dispersive/symbols.hpp"

namespace dispersive {

enum class FamilyKind { fifth, kawahara, seventh, kdv };

/** A concrete equation within one of the four families. `alpha` tracks the
 *  mean absorbed by reduce_mean (the original field is u + alpha); it shifts
 *  the first-order symbol coefficient by -2 alpha (-alpha for kdv). */
struct EquationFamily {
    FamilyKind kind = FamilyKind::fifth;
    double nu = -2.0;     // nonlinear coefficient of u u_x
    double theta = 0.0;   // third-order strength (kawahara only)
    double alpha = 0.0;   // absorbed mean
    double omega = 0.0;   // transport coefficient (fifth only)

    static EquationFamily fifth(double omega = 0.0) { return {FamilyKind::fifth, -2.0, 0.0, 0.0, omega}; }
    static EquationFamily kawahara(double theta, double alpha = 0.0) {
        if (!(theta > 0.0)) throw std::invalid_argument("kawahara needs theta > 0");
        return {FamilyKind::kawahara, -2.0, theta, alpha, 0.0};
    }
    static EquationFamily seventh(double alpha = 0.0) { return {FamilyKind::seventh, -2.0, 0.0, alpha, 0.0}; }
    static EquationFamily kdv(double alpha = 0.0) { return {FamilyKind::kdv, -1.0, 0.0, alpha, 0.0}; }

    std::string name() const {
        switch (kind) {
            case FamilyKind::fifth: return "fifth";
            case FamilyKind::kawahara: return "kawahara";
            case FamilyKind::seventh: return "seventh";
            case FamilyKind::kdv: return "kdv";
        }
        return "?";
    }

    /** ψ(k) for the reduced (mean-zero) equation:
     *    fifth:    k^5 + (ω - 2α) k
     *    kawahara: k^5 - θ k^3 - 2α k
     *    seventh: -k^7 - 2α k
     *    kdv:      k^3 - α k                                     */
    LinearSymbol symbol() const {
        switch (kind) {
            case FamilyKind::fifth: return LinearSymbol({{1.0, 5}, {omega - 2.0 * alpha, 1}});
            case FamilyKind::kawahara: return LinearSymbol({{1.0, 5}, {-theta, 3}, {-2.0 * alpha, 1}});
            case FamilyKind::seventh: return LinearSymbol({{-1.0, 7}, {-2.0 * alpha, 1}});
            case FamilyKind::kdv: return LinearSymbol({{1.0, 3}, {-alpha, 1}});
        }
        throw std::logic_error("unreachable");
    }
};

inline EquationFamily family_by_name(const std::string& name, double theta, double alpha,
                                     double omega) {
    if (name == "fifth") { auto f = EquationFamily::fifth(omega); f.alpha = alpha; return f; }
    if (name == "kawahara") return EquationFamily::kawahara(theta, alpha);
    if (name == "seventh") return EquationFamily::seventh(alpha);
    if (name == "kdv") return EquationFamily::kdv(alpha);
    throw std::invalid_argument("unknown family: " + name + " (expected fifth|kawahara|seventh|kdv)");
}

/** Coefficient boxes used for the uniform witness constants. The concrete
 *  first-order coefficient is widened into the default box when necessary. */
inline SymbolFamilyBox hypotheses_box(const EquationFamily& fam) {
    auto first_order_box = [](double concrete, double half_width) {
        double h = std::max(half_width, std::abs(concrete));
        return CoeffInterval{-h, h};
    };
    switch (fam.kind) {
        case FamilyKind::fifth:
            return {{5, 1}, {CoeffInterval{1, 1}, first_order_box(fam.omega - 2 * fam.alpha, 0.5)}};
        case FamilyKind::kawahara: {
            // The first-order box must keep |ψ| > 0: stay well below
            // min_k |k^5 - θ k^3| (scanned; the cubic term only competes while
            // k^2 <= θ + 1).
            double m0 = std::numeric_limits<double>::infinity();
            int k_top = static_cast<int>(std::ceil(std::sqrt(fam.theta))) + 2;
            for (int k = 1; k <= k_top; ++k) {
                double v = std::abs(std::pow(k, 5) - fam.theta * std::pow(k, 3));
                m0 = std::min(m0, v);
            }
            if (!(m0 > 0.0))
                throw std::invalid_argument("kawahara theta is a resonant square; no witness box");
            return {{5, 3, 1},
                    {CoeffInterval{1, 1}, CoeffInterval{-fam.theta, -fam.theta},
                     first_order_box(-2 * fam.alpha, m0 / 8.0)}};
        }
        case FamilyKind::seventh:
            return {{7, 1}, {CoeffInterval{-1, -1}, first_order_box(-2 * fam.alpha, 0.5)}};
        case FamilyKind::kdv:
            return {{3, 1}, {CoeffInterval{1, 1}, first_order_box(-fam.alpha, 0.5)}};
    }
    throw std::logic_error("unreachable");
}

/** Absorb a nonzero spatial mean into the family: u = g - mean solves the
 *  reduced equation with the first-order coefficient shifted by -2·mean
 *  (-mean for kdv, whose nonlinearity is u u_x). Exact inverse: add
 *  family.alpha back to the field's mean. */
inline std::pair<FourierField, EquationFamily> reduce_mean(const FourierField& oscillating_part,
                                                           double mean,
                                                           const EquationFamily& fam) {
    EquationFamily out = fam;
    out.alpha += mean;
    return {oscillating_part, out};
}

struct SolverConfig {
    int K = 64;
    double dt = 1e-3;
    bool dealias = true;        // exact convolution; false = circular wrap
    int snapshot_stride = 1;    // store every n-th step (ends always stored)
    long long steps_override = 0;  // >0: exact step count, h = T/steps
    double growth_guard = 10.0;    // abort when ||v||_L2 exceeds guard x initial
};

/** ∂_t v at time t for the reduced equation, in the interaction variable:
 *  E(-t) ν/2 ∂_x (E(t)v)^2 with E(t) = diag e^{iψ(k)t}. The symmetric ∂_x(u²)/2
 *  form keeps conjugate symmetry exact. */
inline FourierField interaction_rhs(const FourierField& v, long double t,
                                    const LinearSymbol& A, double nu, bool dealias = true) {
    FourierField u = apply_multiplier(v, [&](int k) { return unit_phase(A.value_l(k) * t); });
    FourierField u2 = dealias ? product(u, u) : aliased_product(u, u);
    FourierField w = derivative(u2, 1);
    w *= 0.5 * nu;
    return apply_multiplier(w, [&](int k) { return unit_phase(-A.value_l(k) * t); });
}

struct Trajectory {
    EquationFamily family;
    SolverConfig cfg;
    double T = 0;
    double h = 0;                    // actual uniform step
    std::vector<double> times;       // snapshot times
    std::vector<FourierField> v;     // interaction-variable snapshots
    std::vector<long long> steps;    // step index of each snapshot

    /** Physical field u(t_i) = E(t_i) v_i. */
    FourierField u_at(std::size_t i) const {
        LinearSymbol A = family.symbol();
        return apply_linear(A, times.at(i), v.at(i));
    }
};

/** Integrate to T with uniform steps h = T/n, n = ceil(T/dt) (h <= dt, exact
 *  landing). Aborts on NaN or when the L2 norm exceeds the growth guard —
 *  runaway growth at desk amplitudes means the step or data left the regime
 *  the scheme is trusted in. */
inline Trajectory solve(const FourierField& u0, const EquationFamily& fam, double T,
                        const SolverConfig& cfg) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (u0.K() != cfg.K) throw std::invalid_argument("initial field K does not match config");

    LinearSymbol A = fam.symbol();
    long long n = cfg.steps_override > 0
                      ? cfg.steps_override
                      : static_cast<long long>(std::ceil(T / cfg.dt - 1e-12));
    if (n < 1) n = 1;
    const double h = T / static_cast<double>(n);

    // Nonlinear CFL guard: h <= 0.5 / (K |ν| sup|u|), with sup|u| bounded by
    // 2 Σ_{k>=1} |c_k|. Linear runs (ν = 0) are unconditional.
    if (fam.nu != 0.0) {
        double sup_u = 0.0;
        for (int k = 1; k <= u0.K(); ++k) sup_u += 2.0 * std::abs(u0.coeff(k));
        double cfl = 0.5 / (static_cast<double>(cfg.K) * std::abs(fam.nu) * std::max(sup_u, 1e-300));
        if (h > cfl && sup_u > 0.0)
            throw std::invalid_argument("dt exceeds the nonlinear CFL limit " + std::to_string(cfl));
    }

    Trajectory traj;
    traj.family = fam;
    traj.cfg = cfg;
    traj.T = T;
    traj.h = h;

    FourierField v = u0;  // v(0) = u(0)
    const double l2_0 = sobolev_norm(v, 0.0);
    auto snapshot = [&](long long step) {
        traj.times.push_back(static_cast<double>(step) * h);
        traj.v.push_back(v);
        traj.steps.push_back(step);
    };
    snapshot(0);

    const int stride = std::max(1, cfg.snapshot_stride);
    for (long long i = 0; i < n; ++i) {
        long double t = static_cast<long double>(i) * static_cast<long double>(h);
        long double th2 = t + 0.5L * h;
        FourierField k1 = interaction_rhs(v, t, A, fam.nu, cfg.dealias);
        FourierField k2 = interaction_rhs(v + (0.5 * h) * k1, th2, A, fam.nu, cfg.dealias);
        FourierField k3 = interaction_rhs(v + (0.5 * h) * k2, th2, A, fam.nu, cfg.dealias);
        FourierField k4 = interaction_rhs(v + h * k3, t + static_cast<long double>(h), A, fam.nu,
                                          cfg.dealias);
        k2 += k3;  // k1 + 2 k2 + 2 k3 + k4
        k2 *= 2.0;
        k1 += k2;
        k1 += k4;
        v += (h / 6.0) * k1;

        double l2 = sobolev_norm(v, 0.0);
        if (!std::isfinite(l2) || (l2_0 > 0.0 && l2 > cfg.growth_guard * l2_0))
            throw solver_error(static_cast<double>(i + 1) * h,
                               "instability: norm grew past the guard at t = " +
                                   std::to_string(static_cast<double>(i + 1) * h));
        if ((i + 1) % stride == 0 || i + 1 == n) snapshot(i + 1);
    }
    return traj;
}

struct DiagnosticsRow {
    double t = 0, mean = 0, l2 = 0, h6 = 0;
};

/** Per-snapshot invariants: the mean is structurally zero, the L2 norm is
 *  conserved by the flow (|v_k| = |u_k|, so either variable serves), H6
 *  tracks the energy scale. */
inline std::vector<DiagnosticsRow> conserved_diagnostics(const Trajectory& traj) {
    std::vector<DiagnosticsRow> out;
    out.reserve(traj.v.size());
    for (std::size_t i = 0; i < traj.v.size(); ++i) {
        DiagnosticsRow row;
        row.t = traj.times[i];
        row.mean = traj.v[i].coeff(0).real();
        row.l2 = sobolev_norm(traj.v[i], 0.0);
        row.h6 = sobolev_norm(traj.v[i], 6.0);
        out.push_back(row);
    }
    return out;
}

struct DoublingCheck {
    bool pass = true;
    double first_violation_t = -1.0;
};

/** Small data should never double its H^s norm over the run. */
inline DoublingCheck doubling_time_check(const Trajectory& traj, SobolevIndex s = 6.0) {
    DoublingCheck out;
    if (traj.v.empty()) return out;
    double n0 = sobolev_norm(traj.v.front(), s);
    for (std::size_t i = 1; i < traj.v.size(); ++i) {
        if (sobolev_norm(traj.v[i], s) > 2.0 * n0) {
            out.pass = false;
            out.first_violation_t = traj.times[i];
            return out;
        }
    }
    return out;
}

}  // namespace dispersive
