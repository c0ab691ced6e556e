#pragma once
// Excluded period sets: around every resonance 2πn/|ψ(k)| inside (or poking
// into) the window [T1, T2], remove a closed interval of radius
// ε_k = c0 |k|^{-p-r₁}. On the complement the periodic inverse factor obeys
// |1/(1 - e^{iψ(k)T})| <= c1 |k|^p for all 1 <= |k| <= k_max, with
// c1 = √2/(c0 · S_inf) and the removed measure <= δ.
//
// Interval counts per mode grow like |ψ(k)| (≈10¹¹ totals at k_max = 128 for
// a fifth-order symbol), so storage is one resonance row per k and membership
// rounds to the nearest multiple of 2π in phase space; explicit intervals are
// enumerable on demand with a cap. Phase arithmetic stays in long double:
// interval radii at high k sit below the ULP of T itself, but distances
// measured as |ψ·T mod 2π| keep ~9 spare digits against ε_k|ψ(k)|.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dispersive/common.hpp"
#include "dispersive/symbols.hpp"

namespace dispersive {

// Upper bound on Σ_{k=1}^∞ k^{-p}: partial sum to N plus the integral tail.
inline double p_series_upper(double p, int N) {
    if (!(p > 1.0)) throw std::invalid_argument("p-series needs p > 1");
    double s = 0.0;
    for (int k = 1; k <= N; ++k) s += std::pow(static_cast<double>(k), -p);
    return s + std::pow(static_cast<double>(N), 1.0 - p) / (p - 1.0);
}

// Upper bound on Σ_{k=N+1}^∞ k^{-p} (integral comparison).
inline double p_series_tail_upper(double p, int N) {
    if (!(p > 1.0)) throw std::invalid_argument("p-series needs p > 1");
    return std::pow(static_cast<double>(N), 1.0 - p) / (p - 1.0);
}

/** One mode's resonances: centers 2πn/|ψ(k)| for n in [n_lo, n_hi], shared
 *  radius. The range already includes boundary neighbors whose interval pokes
 *  into the window; it is empty when n_hi < n_lo. */
struct ResonanceRow {
    int k = 0;
    long double abs_psi = 0.0L;
    double radius = 0.0;
    long long n_lo = 1, n_hi = 0;
    double removed = 0.0;  // Σ clipped interval lengths for this |k|

    long long count() const { return n_hi >= n_lo ? n_hi - n_lo + 1 : 0; }
};

struct DivisorInterval {
    int k = 0;
    long long n = 0;
    double center = 0.0;
    double radius = 0.0;
};

struct ExcludedSet {
    double T1 = 0, T2 = 0, p = 0, delta = 0;
    int k_max = 0;
    double c0 = 0, c1 = 0;
    double removed_measure = 0;    // Σ over rows (each |k| counted once)
    double uncertified_tail = 0;   // measure bound for the ignored |k| > k_max
    HypothesesWitness witness;
    std::vector<ResonanceRow> rows;  // k = 1..k_max; -k mirrors k (ψ is odd)
};

enum class PeriodVerdict { certified, excluded, outside_window };

struct PeriodClass {
    PeriodVerdict verdict = PeriodVerdict::certified;
    int k = 0;        // excluding mode when verdict == excluded
    long long n = 0;  // resonance index when verdict == excluded
};

/** Build the excluded set for a concrete symbol, using a family witness for
 *  the uniform constants. c0 takes 0.99x the tightest of:
 *   (i)  3/2 / Σ_m sup|α_m|            (keeps ε_k|ψ(k)| < 3/2 < π: disjoint,
 *                                       and the quadratic cosine bound applies)
 *   (ii) δ / (2 (1 + (T2-T1) S_sup) Σ_{k≠0} |k|^{-p})
 *   (iii) δ / (2 [ (T2-T1) S_sup/(2π) Σ_{k>=1} k^{-p} + 3 Σ_{k>=1} k^{-(p+r₁)} ])
 *  (ii) is the classical per-mode count bound; (iii) additionally pays for the
 *  two boundary-neighbor resonances per mode that this builder removes (their
 *  omission would leave uncertified slivers at the window edges). Either cap
 *  alone keeps the total removed measure <= δ; we take both. */
inline ExcludedSet build_excluded_set(const LinearSymbol& A, const HypothesesWitness& w,
                                      double T1, double T2, double p, double delta, int k_max) {
    if (!(0.0 < T1 && T1 < T2)) throw std::invalid_argument("window needs 0 < T1 < T2");
    if (!(p > 1.0)) throw std::invalid_argument("p must exceed 1 for a summable series");
    if (!(delta > 0.0 && delta < T2 - T1))
        throw std::invalid_argument("delta must lie in (0, T2 - T1)");
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    if (!(w.beta2 > 0.0 && w.s_inf > 0.0))
        throw std::invalid_argument("witness does not certify the symbol family");

    const int r1 = A.leading_order();
    const double len = T2 - T1;

    const int series_N = std::max(k_max, 1000);
    const double zp2 = 2.0 * p_series_upper(p, series_N);  // Σ_{k≠0} |k|^{-p} bound
    const double cap_taylor = 1.5 / w.sup_alpha_sum;
    const double cap_measure = delta / (2.0 * (1.0 + len * w.s_sup) * zp2);
    const double cap_neighbors =
        delta / (2.0 * (len * w.s_sup / two_pi * p_series_upper(p, series_N) +
                        3.0 * p_series_upper(p + r1, series_N)));

    ExcludedSet S;
    S.T1 = T1;
    S.T2 = T2;
    S.p = p;
    S.delta = delta;
    S.k_max = k_max;
    S.witness = w;
    S.c0 = 0.99 * std::min({cap_taylor, cap_measure, cap_neighbors});
    S.c1 = std::sqrt(2.0) / (S.c0 * w.s_inf);
    S.rows.reserve(static_cast<std::size_t>(k_max));

    double removed = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        ResonanceRow row;
        row.k = k;
        row.abs_psi = fabsl(A.value_l(k));
        if (!(row.abs_psi > 0.0L))
            throw std::invalid_argument("symbol is resonant at k = " + std::to_string(k) +
                                        "; no excluded set exists");
        row.radius = S.c0 * std::pow(static_cast<double>(k), -p - r1);
        // Guarded by cap (i) whenever the concrete coefficients lie in the
        // witness box; re-checked here so a mismatched symbol cannot produce
        // overlapping intervals silently.
        long double eps_psi = static_cast<long double>(row.radius) * row.abs_psi;
        if (!(eps_psi < 1.5L))
            throw std::invalid_argument("symbol exceeds the witness envelope at k = " +
                                        std::to_string(k));
        // All n >= 1 whose closed interval meets [T1, T2]:
        long double lo = (static_cast<long double>(T1) - row.radius) * row.abs_psi / two_pi_l;
        long double hi = (static_cast<long double>(T2) + row.radius) * row.abs_psi / two_pi_l;
        row.n_lo = std::max(1LL, static_cast<long long>(ceill(lo)));
        row.n_hi = static_cast<long long>(floorl(hi));
        if (row.count() > 0) {
            // Interior intervals (all but the first and last) sit fully inside
            // the window: consecutive centers are 2π/|ψ| > 4ε apart.
            auto clip = [&](long long n) {
                long double c = two_pi_l * static_cast<long double>(n) / row.abs_psi;
                long double a = std::max(static_cast<long double>(T1), c - row.radius);
                long double b = std::min(static_cast<long double>(T2), c + row.radius);
                return b > a ? static_cast<double>(b - a) : 0.0;
            };
            if (row.count() == 1) {
                row.removed = clip(row.n_lo);
            } else {
                row.removed = clip(row.n_lo) + clip(row.n_hi) +
                              2.0 * row.radius * static_cast<double>(row.count() - 2);
            }
        }
        removed += row.removed;
        S.rows.push_back(row);
    }
    S.removed_measure = removed;
    if (!(S.removed_measure <= delta))
        throw std::logic_error("removed measure exceeds delta; cap computation broken");

    // Modes beyond k_max are not excluded; their intervals' total length obeys
    // the same per-mode count bound, reported so callers can judge the gap.
    S.uncertified_tail =
        2.0 * S.c0 * (len * w.s_sup / two_pi * p_series_tail_upper(p, k_max) +
                      3.0 * p_series_tail_upper(p + r1, k_max));
    return S;
}

/** Classify T: outside the window, inside some excluded interval (with the
 *  witnessing mode and resonance index), or certified. Membership is decided
 *  in phase space: |ψ(k)·T mod 2π| <= ε_k |ψ(k)|. */
inline PeriodClass classify_period(const ExcludedSet& S, double T) {
    PeriodClass out;
    if (T < S.T1 || T > S.T2) {
        out.verdict = PeriodVerdict::outside_window;
        return out;
    }
    for (const auto& row : S.rows) {
        if (row.count() == 0) continue;
        long double theta = row.abs_psi * static_cast<long double>(T);
        long long n = static_cast<long long>(llroundl(theta / two_pi_l));
        if (n < row.n_lo || n > row.n_hi) continue;
        double gap = std::abs(reduced_phase(row.abs_psi, T));
        if (static_cast<long double>(gap) <= static_cast<long double>(row.radius) * row.abs_psi) {
            out.verdict = PeriodVerdict::excluded;
            out.k = row.k;
            out.n = n;
            return out;
        }
    }
    out.verdict = PeriodVerdict::certified;
    return out;
}

/** Signed distance from T to the nearest enumerated excluded interval
 *  (negative inside one). Diagnostic column for the period sweeps. */
inline double nearest_exclusion_gap(const ExcludedSet& S, double T) {
    long double best = std::numeric_limits<long double>::infinity();
    for (const auto& row : S.rows) {
        if (row.count() == 0) continue;
        long double theta = row.abs_psi * static_cast<long double>(T);
        long long n = static_cast<long long>(llroundl(theta / two_pi_l));
        long double dist;
        if (n >= row.n_lo && n <= row.n_hi) {
            dist = fabsl(static_cast<long double>(reduced_phase(row.abs_psi, T))) / row.abs_psi;
        } else {
            n = std::clamp(n, row.n_lo, row.n_hi);
            dist = fabsl(theta - two_pi_l * static_cast<long double>(n)) / row.abs_psi;
        }
        best = std::min(best, dist - static_cast<long double>(row.radius));
    }
    return static_cast<double>(best);
}

/** Uniform rejection sampling of certified periods; deterministic per seed.
 *  Throws if the acceptance rate collapses (δ comparable to the window). */
inline std::vector<double> sample_periods(const ExcludedSet& S, int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample count must be >= 1");
    std::mt19937_64 gen(seed);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    long long budget = 10000LL * count;
    while (static_cast<int>(out.size()) < count && budget-- > 0) {
        double T = S.T1 + (S.T2 - S.T1) * uniform01(gen);
        if (classify_period(S, T).verdict == PeriodVerdict::certified) out.push_back(T);
    }
    if (static_cast<int>(out.size()) < count)
        throw std::runtime_error("rejection sampling budget exhausted; excluded set nearly fills the window");
    return out;
}

struct CertifyReport {
    bool pass = false;
    bool skipped = false;  // T was not certified; bound not applicable
    PeriodClass gate;
    double max_ratio = 0.0;  // max_k |1/(1-e^{iψT})| / (c1 k^p)
    int argmax_k = 0;
};

/** Check |1/(1 - e^{iψ(k)T})| <= c1 |k|^p for k = 1..k_range at a certified T.
 *  The bound is guaranteed for k_range <= k_max; beyond that it reports
 *  whatever it finds (tail modes carry no certificate). */
inline CertifyReport certify_bound(const LinearSymbol& A, const ExcludedSet& S, double T,
                                   int k_range) {
    CertifyReport rep;
    rep.gate = classify_period(S, T);
    if (rep.gate.verdict != PeriodVerdict::certified) {
        rep.skipped = true;
        return rep;
    }
    for (int k = 1; k <= k_range; ++k) {
        double mag;
        try {
            mag = inverse_factor_magnitude(A, T, k);
        } catch (const resonance_error&) {
            rep.max_ratio = std::numeric_limits<double>::infinity();
            rep.argmax_k = k;
            rep.pass = false;
            return rep;
        }
        double ratio = mag / (S.c1 * std::pow(static_cast<double>(k), S.p));
        if (ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.argmax_k = k;
        }
    }
    rep.pass = rep.max_ratio <= 1.0 + 1e-9;
    return rep;
}

/** Explicit (k, n, center, radius) tuples, capped; centers are rounded to
 *  double for inspection (sub-ULP radii at high k make the explicit form
 *  unusable for membership — use classify_period). */
inline std::vector<DivisorInterval> enumerate_intervals(const ExcludedSet& S, std::size_t cap) {
    std::vector<DivisorInterval> out;
    for (const auto& row : S.rows) {
        for (long long n = row.n_lo; n <= row.n_hi; ++n) {
            if (out.size() >= cap) return out;
            DivisorInterval iv;
            iv.k = row.k;
            iv.n = n;
            iv.center = static_cast<double>(two_pi_l * static_cast<long double>(n) / row.abs_psi);
            iv.radius = row.radius;
            out.push_back(iv);
        }
    }
    return out;
}

struct NestedUnionRow {
    int n = 0;
    double delta = 0;
    double c0 = 0;
    double removed = 0;
};

/** Measures of the nested family δ_n = (T2-T1)/n, n = 2..n_levels: the
 *  removed measure and c0 both shrink as δ does. */
inline std::vector<NestedUnionRow> nested_union_table(const LinearSymbol& A,
                                                      const HypothesesWitness& w, double T1,
                                                      double T2, double p, int k_max,
                                                      int n_levels) {
    if (n_levels < 2) throw std::invalid_argument("n_levels must be >= 2");
    std::vector<NestedUnionRow> out;
    for (int n = 2; n <= n_levels; ++n) {
        double delta = (T2 - T1) / n;
        ExcludedSet S = build_excluded_set(A, w, T1, T2, p, delta, k_max);
        out.push_back({n, delta, S.c0, S.removed_measure});
    }
    return out;
}

inline nlohmann::json to_json(const ExcludedSet& S, std::size_t interval_cap = 200) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : S.rows)
        rows.push_back({{"k", r.k},
                        {"abs_psi", static_cast<double>(r.abs_psi)},
                        {"radius", r.radius},
                        {"n_lo", r.n_lo},
                        {"n_hi", r.n_hi},
                        {"interval_count", r.count()},
                        {"removed", r.removed}});
    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& iv : enumerate_intervals(S, interval_cap))
        intervals.push_back({{"k", iv.k}, {"n", iv.n}, {"center", iv.center}, {"radius", iv.radius}});
    return {{"T1", S.T1},
            {"T2", S.T2},
            {"p", S.p},
            {"delta", S.delta},
            {"k_max", S.k_max},
            {"c0", S.c0},
            {"c1", S.c1},
            {"removed_measure", S.removed_measure},
            {"uncertified_tail", S.uncertified_tail},
            {"beta1", S.witness.beta1},
            {"beta2", S.witness.beta2},
            {"rows", std::move(rows)},
            {"intervals", std::move(intervals)}};
}

}  // namespace dispersive
