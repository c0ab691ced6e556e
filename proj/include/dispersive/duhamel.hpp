#pragma once
// The inhomogeneous (smoothing) part of the period map and its normal-form
// evaluation. With v the interaction variable and
// Φ(k,j) = ψ(k) - ψ(k-j) - ψ(j), the quadratic term integrates by parts to
//
//   v_k(T) - v_k(0) = B_k(0) - B_k(T) + ∫₀ᵀ (R_k + Y_k) dt,
//   B_k = ν(k/2) Σ'  e^{-itΦ}/Φ · v_{k-j} v_j            (non-resonant pairs)
//   R_k = ν(k/2) Σ'  e^{-itΦ}/Φ · (w_{k-j} v_j + v_{k-j} w_j),  w = ∂_t v
//   Y_k = ν(ik/2) Σ  e^{-itΦ}   · v_{k-j} v_j            (resonant pairs)
//
// so S_D(T)u0 = e^{iψT}(v(T) - v(0)) gains derivatives through the integer
// factorization of Φ. Φ factors exactly:
//   third order:    3 k j (k-j)
//   fifth order:    5 (k-j) j k σ,  σ = k² - kj + j² = ½(k² + (k-j)² + j²)
//   fifth - θ·third (kawahara): 5 j k (k-j)(σ - 3θ/5)
//   seventh order: -7 (k-j) j k τ,  τ = k⁴ - 2k²(k-j)j + (k-j)²j²
//                                     = ½(k⁴ + (k-j)⁴ + j⁴)
// First-order symbol terms cancel in Φ. Resonant pairs (only kawahara with
// θ = 5σ/3, so θ >= 5) are carried as the unintegrated direct term Y.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dispersive/common.hpp"
#include "dispersive/evolution.hpp"
#include "dispersive/field.hpp"
#include "dispersive/symbols.hpp"

namespace dispersive {

/** Φ(k,j) as an exact integer plus a θ-multiple: Φ = base + θ·theta_factor.
 *  int128 keeps the direct power expansions exact through |k|,|j| <= 1000. */
struct PhaseValue {
    int128 base = 0;
    int128 theta_factor = 0;

    long double value(double theta) const {
        return static_cast<long double>(base) +
               static_cast<long double>(theta) * static_cast<long double>(theta_factor);
    }
};

inline void require_admissible(int k, int j) {
    if (k == 0 || j == 0 || j == k)
        throw std::invalid_argument("phase needs k != 0, j != 0, j != k");
}

inline PhaseValue phase_value(const EquationFamily& fam, int k, int j) {
    require_admissible(k, j);
    int128 K = k, J = j, M = k - j;  // k = (k-j) + j
    PhaseValue pv;
    switch (fam.kind) {
        case FamilyKind::fifth: {
            int128 sigma = K * K - K * J + J * J;
            pv.base = 5 * M * J * K * sigma;
            break;
        }
        case FamilyKind::kawahara: {
            int128 sigma = K * K - K * J + J * J;
            pv.base = 5 * M * J * K * sigma;
            pv.theta_factor = -3 * K * J * M;
            break;
        }
        case FamilyKind::seventh: {
            int128 tau = K * K * K * K - 2 * K * K * M * J + M * M * J * J;
            pv.base = -7 * M * J * K * tau;
            break;
        }
        case FamilyKind::kdv:
            pv.base = 3 * K * J * M;
            break;
    }
    return pv;
}

/** A pair is resonant when Φ vanishes (within 1e-9 relative, guarding the
 *  1/Φ weight): exactly the kawahara coincidences θ = 5σ/3. */
inline bool is_resonant(const EquationFamily& fam, int k, int j) {
    PhaseValue pv = phase_value(fam, k, j);
    long double v = pv.value(fam.theta);
    long double scale = std::max<long double>(
        1.0L, std::max(fabsl(static_cast<long double>(pv.base)),
                       fabsl(static_cast<long double>(fam.theta) *
                             static_cast<long double>(pv.theta_factor))));
    return fabsl(v) <= 1e-9L * scale;
}

/** All admissible resonant (k, j) with 1 <= k <= K, |j|,|k-j| <= K. Only the
 *  k >= 1 half is listed; negative k mirrors by conjugation. */
inline std::vector<std::vector<int>> resonant_pairs(const EquationFamily& fam, int K) {
    std::vector<std::vector<int>> pairs(static_cast<std::size_t>(K) + 1);
    if (fam.kind != FamilyKind::kawahara) return pairs;  // Φ never vanishes otherwise
    for (int k = 1; k <= K; ++k)
        for (int j = std::max(-K, k - K); j <= K; ++j) {
            if (j == 0 || j == k) continue;
            if (is_resonant(fam, k, j)) pairs[static_cast<std::size_t>(k)].push_back(j);
        }
    return pairs;
}

inline int resonant_pair_count(const std::vector<std::vector<int>>& pairs) {
    int n = 0;
    for (const auto& p : pairs) n += static_cast<int>(p.size());
    return n;
}

// ---------------------------------------------------------------------------
// Exact integer identity scan: the direct expansions k^r - (k-j)^r - j^r
// against the factored forms, plus the half-sum shapes of σ and τ.

struct IdentityScan {
    bool ok = true;
    int bad_r = 0, bad_k = 0, bad_j = 0;
    long long pairs_checked = 0;
};

inline IdentityScan scan_phase_identities(int k_range) {
    IdentityScan res;
    for (int k = -k_range; k <= k_range && res.ok; ++k) {
        if (k == 0) continue;
        for (int j = -k_range; j <= k_range; ++j) {
            if (j == 0 || j == k) continue;
            int128 K = k, J = j, M = k - j;
            int128 sigma = K * K - K * J + J * J;
            int128 tau = K * K * K * K - 2 * K * K * M * J + M * M * J * J;
            int128 d3 = ipow(K, 3) - ipow(M, 3) - ipow(J, 3);
            int128 d5 = ipow(K, 5) - ipow(M, 5) - ipow(J, 5);
            int128 d7 = ipow(K, 7) - ipow(M, 7) - ipow(J, 7);
            int bad = 0;
            if (d3 != 3 * K * J * M) bad = 3;
            else if (d5 != 5 * M * J * K * sigma) bad = 5;
            else if (d7 != 7 * M * J * K * tau) bad = 7;
            else if (2 * sigma != K * K + M * M + J * J) bad = 2;
            else if (2 * tau != ipow(K, 4) + ipow(M, 4) + ipow(J, 4)) bad = 4;
            else if (sigma <= 0 || tau <= 0) bad = 1;
            ++res.pairs_checked;
            if (bad) {
                res.ok = false;
                res.bad_r = bad;
                res.bad_k = k;
                res.bad_j = j;
                break;
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Denominator gain bounds: the factored Φ absorbs the k-derivatives the
// quadratic term spends, with family constants
//   |k²/σ| <= 2, |k³/(j(k-j)σ)| <= 4, |k⁴/τ| <= 2,
//   |k²/(σ - 3θ/5)| <= 2 (kawahara, small θ), |k²/(kj(k-j))| <= 2 (kdv).

struct DenominatorScan {
    int k_range = 0;
    double kawahara_theta = 0.0;
    bool positivity_ok = true;  // σ > 0 and τ > 0 throughout
    double max_sigma_gain = 0.0;
    double max_b_denominator = 0.0;
    double max_tau_gain = 0.0;
    double max_kawahara_gain = 0.0;
    double max_kdv_gain = 0.0;
    int kawahara_resonances_skipped = 0;
    bool pass = false;
};

inline DenominatorScan denominator_bounds(int k_range, double kawahara_theta) {
    DenominatorScan s;
    s.k_range = k_range;
    s.kawahara_theta = kawahara_theta;
    for (int k = -k_range; k <= k_range; ++k) {
        if (k == 0) continue;
        for (int j = -k_range; j <= k_range; ++j) {
            if (j == 0 || j == k) continue;
            double K = k, J = j, M = k - j;
            double sigma = K * K - K * J + J * J;
            double tau = K * K * K * K - 2 * K * K * M * J + M * M * J * J;
            if (sigma <= 0 || tau <= 0) s.positivity_ok = false;
            s.max_sigma_gain = std::max(s.max_sigma_gain, std::abs(K * K / sigma));
            s.max_b_denominator =
                std::max(s.max_b_denominator, std::abs(K * K * K / (J * M * sigma)));
            s.max_tau_gain = std::max(s.max_tau_gain, std::abs(K * K * K * K / tau));
            s.max_kdv_gain = std::max(s.max_kdv_gain, std::abs(K * K / (K * J * M)));
            double kd = sigma - 3.0 * kawahara_theta / 5.0;
            if (std::abs(kd) <= 1e-9 * std::max(1.0, sigma)) {
                ++s.kawahara_resonances_skipped;
            } else {
                s.max_kawahara_gain = std::max(s.max_kawahara_gain, std::abs(K * K / kd));
            }
        }
    }
    s.pass = s.positivity_ok && s.max_sigma_gain <= 2.0 && s.max_b_denominator <= 4.0 &&
             s.max_tau_gain <= 2.0 && s.max_kawahara_gain <= 2.0 && s.max_kdv_gain <= 2.0;
    return s;
}

// ---------------------------------------------------------------------------
// The bilinear forms. Sums run in a fixed j order per output mode, k >= 1
// only with the conjugate mirrored, so results are deterministic and exactly
// conjugate-symmetric for any thread count.

/** B(v, t): the boundary (integrated-by-parts) quadratic form. */
inline FourierField compute_B(const FourierField& v, double t, const EquationFamily& fam) {
    const int K = v.K();
    FourierField B(K);
    for (int k = 1; k <= K; ++k) {
        cplx acc{0.0, 0.0};
        for (int j = std::max(-K, k - K); j <= K; ++j) {
            if (j == 0 || j == k) continue;
            PhaseValue pv = phase_value(fam, k, j);
            long double phi = pv.value(fam.theta);
            if (fam.kind == FamilyKind::kawahara && is_resonant(fam, k, j)) continue;
            acc += unit_phase_at(-phi, t) * (v.coeff(k - j) * v.coeff(j) / static_cast<double>(phi));
        }
        B.set_mode(k, fam.nu * (0.5 * k) * acc);
    }
    return B;
}

/** R(v, t): the remainder form, bilinear in (v, ∂_t v). The inner sum of the
 *  cubic remainder is exactly ∂_t v at the inner index (the phases telescope),
 *  so one rhs evaluation turns the O(K³) double sum into O(K²). */
inline FourierField compute_R(const FourierField& v, const FourierField& w, double t,
                              const EquationFamily& fam) {
    if (v.K() != w.K()) throw std::invalid_argument("field truncations K do not match");
    const int K = v.K();
    FourierField R(K);
    for (int k = 1; k <= K; ++k) {
        cplx acc{0.0, 0.0};
        for (int j = std::max(-K, k - K); j <= K; ++j) {
            if (j == 0 || j == k) continue;
            PhaseValue pv = phase_value(fam, k, j);
            long double phi = pv.value(fam.theta);
            if (fam.kind == FamilyKind::kawahara && is_resonant(fam, k, j)) continue;
            cplx pair = w.coeff(k - j) * v.coeff(j) + v.coeff(k - j) * w.coeff(j);
            acc += unit_phase_at(-phi, t) * (pair / static_cast<double>(phi));
        }
        R.set_mode(k, fam.nu * (0.5 * k) * acc);
    }
    return R;
}

inline FourierField compute_R(const FourierField& v, double t, const EquationFamily& fam) {
    FourierField w = interaction_rhs(v, t, fam.symbol(), fam.nu);
    return compute_R(v, w, t, fam);
}

/** Y(v, t): direct quadratic term over the resonant pairs (kawahara only;
 *  empty for θ < 5). Not integrable by parts — it rides along under the
 *  quadrature. */
inline FourierField compute_resonant_direct(const FourierField& v, double t,
                                            const EquationFamily& fam,
                                            const std::vector<std::vector<int>>& pairs) {
    const int K = v.K();
    FourierField Y(K);
    for (int k = 1; k <= K; ++k) {
        const auto& js = pairs[static_cast<std::size_t>(k)];
        if (js.empty()) continue;
        cplx acc{0.0, 0.0};
        for (int j : js) {
            long double phi = phase_value(fam, k, j).value(fam.theta);
            acc += unit_phase_at(-phi, t) * (v.coeff(k - j) * v.coeff(j));
        }
        Y.set_mode(k, fam.nu * cplx{0.0, 0.5 * k} * acc);
    }
    return Y;
}

// ---------------------------------------------------------------------------
// The two routes to S_D(T) u0 = u(T) - S_L(T) u0.

inline SolverConfig ends_only(SolverConfig cfg) {
    cfg.snapshot_stride = 1 << 30;
    return cfg;
}

/** Production route: integrate and subtract the free flow. */
inline FourierField duhamel_direct(const FourierField& u0, const EquationFamily& fam, double T,
                                   const SolverConfig& cfg) {
    Trajectory traj = solve(u0, fam, T, ends_only(cfg));
    FourierField uT = traj.u_at(traj.v.size() - 1);
    return uT - apply_linear(fam.symbol(), T, u0);
}

struct NormalFormResult {
    FourierField sd;             // e^{iψT} (B(0) - B(T) + ∫(R+Y))
    FourierField b_start, b_end;
    FourierField integral;       // ∫₀ᵀ (R + Y) dt, composite Simpson
    double quad_refine_rel = 0;  // |Simpson(h) - Simpson(2h)| / |Simpson(h)| in H⁴
    int resonant_pairs = 0;
    long long steps = 0;

    NormalFormResult(int K) : sd(K), b_start(K), b_end(K), integral(K) {}
};

/** Normal-form route: boundary terms plus composite Simpson on the solver
 *  grid. The step count is rounded up to a multiple of four so the
 *  half-resolution quadrature reuses the same nodes for an error estimate. */
inline NormalFormResult duhamel_normalform(const FourierField& u0, const EquationFamily& fam,
                                           double T, const SolverConfig& cfg) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
    long long m = 4 * static_cast<long long>(std::ceil(T / (4.0 * cfg.dt) - 1e-12));
    if (m < 4) m = 4;
    SolverConfig run = cfg;
    run.snapshot_stride = 1;
    run.steps_override = m;
    Trajectory traj = solve(u0, fam, T, run);
    if (static_cast<long long>(traj.v.size()) != m + 1)
        throw std::logic_error("normal form expected every-step snapshots");

    auto pairs = resonant_pairs(fam, u0.K());

    NormalFormResult res(u0.K());
    res.steps = m;
    res.resonant_pairs = resonant_pair_count(pairs);
    res.b_start = compute_B(traj.v.front(), 0.0, fam);
    res.b_end = compute_B(traj.v.back(), T, fam);

    const double h = traj.h;
    FourierField sum_full(u0.K()), sum_half(u0.K());
    LinearSymbol A = fam.symbol();
    for (long long i = 0; i <= m; ++i) {
        double t = traj.times[static_cast<std::size_t>(i)];
        const FourierField& vi = traj.v[static_cast<std::size_t>(i)];
        FourierField w = interaction_rhs(vi, t, A, fam.nu, cfg.dealias);
        FourierField G = compute_R(vi, w, t, fam);
        if (res.resonant_pairs > 0) G += compute_resonant_direct(vi, t, fam, pairs);
        double wf = (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        sum_full += wf * G;
        if (i % 2 == 0) {
            long long e = i / 2;
            double wh = (e == 0 || e == m / 2) ? 1.0 : (e % 2 == 1 ? 4.0 : 2.0);
            sum_half += wh * G;
        }
    }
    res.integral = (h / 3.0) * sum_full;
    FourierField integral_half = (2.0 * h / 3.0) * sum_half;
    double denom = std::max(sobolev_norm(res.integral, 4.0), 1e-300);
    res.quad_refine_rel = sobolev_norm(res.integral - integral_half, 4.0) / denom;

    FourierField combo = res.b_start - res.b_end + res.integral;
    res.sd = apply_linear(A, T, combo);
    return res;
}

// ---------------------------------------------------------------------------
// Smoothing-scale experiment: one fixed random shape scaled through an
// amplitude ladder; fits log ||S_D(T) u0|| against log amplitude (the
// quadratic term should dominate: slope ≈ 2) and tabulates the ratios
// ||S_D u0||_{s+p} / (||u0||_s ||u0||_{s+p̃}^q).

struct SmoothingParams {
    double s = 6, p = 2, ptilde = 0, q = 1;
    double T = 1.0;
    double decay = 8.0;
    std::uint64_t seed = 7;
    std::vector<double> amplitudes;  // strictly decreasing, positive
};

struct SmoothingRow {
    double amplitude = 0, norm_s = 0, norm_s_ptilde = 0, norm_sd = 0, ratio = 0;
};

struct SmoothingReport {
    SmoothingParams params;
    std::vector<SmoothingRow> rows;
    LineFit fit;        // log-log slope of ||S_D|| vs amplitude
    double eta = 0.0;   // largest ||u0||_{s+p̃} on the ladder (smallness scale)
};

inline SmoothingReport smoothing_report(const EquationFamily& fam, const SolverConfig& cfg,
                                        const SmoothingParams& params) {
    if (params.amplitudes.size() < 2)
        throw std::invalid_argument("amplitude ladder needs >= 2 rungs");
    for (std::size_t i = 0; i < params.amplitudes.size(); ++i) {
        if (!(params.amplitudes[i] > 0.0))
            throw std::invalid_argument("ladder amplitudes must be positive");
        if (i && !(params.amplitudes[i] < params.amplitudes[i - 1]))
            throw std::invalid_argument("ladder amplitudes must strictly decrease");
    }
    FourierField shape = random_field(cfg.K, 1.0, params.decay, params.seed);
    if (sobolev_norm(shape, 0.0) == 0.0) throw std::invalid_argument("degenerate zero shape");

    SmoothingReport rep;
    rep.params = params;
    std::vector<double> lx, ly;
    for (double a : params.amplitudes) {
        FourierField u0 = a * shape;
        FourierField sd = duhamel_direct(u0, fam, params.T, cfg);
        SmoothingRow row;
        row.amplitude = a;
        row.norm_s = sobolev_norm(u0, params.s);
        row.norm_s_ptilde = sobolev_norm(u0, params.s + params.ptilde);
        row.norm_sd = sobolev_norm(sd, params.s + params.p);
        row.ratio = row.norm_sd / (row.norm_s * std::pow(row.norm_s_ptilde, params.q));
        rep.rows.push_back(row);
        rep.eta = std::max(rep.eta, row.norm_s_ptilde);
        lx.push_back(std::log(a));
        ly.push_back(std::log(std::max(row.norm_sd, 1e-300)));
    }
    rep.fit = fit_line(lx, ly);
    return rep;
}

}  // namespace dispersive
