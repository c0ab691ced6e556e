#pragma once
// The period map K(T) = (I - S_L(T))^{-1} S_D(T) and its contraction
// experiments. Small certified-period fixed points of K are the time-periodic
// solutions; on certified periods and small data the map should contract with
// factor ~ ||u0||, so the only fixed point in the ball is zero.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dispersive/common.hpp"
#include "dispersive/duhamel.hpp"
#include "dispersive/evolution.hpp"
#include "dispersive/field.hpp"
#include "dispersive/smalldivisor.hpp"
#include "dispersive/symbols.hpp"

namespace dispersive {

enum class SdRoute { direct, normalform };

/** One application of K(T). The period must be certified by the excluded set
 *  (the inverse factor is only bounded there); both S_D routes are exposed so
 *  they can be cross-checked. Output symmetry and zero mean hold by
 *  construction of the coefficient pipeline. */
inline FourierField apply_K(const FourierField& u0, const EquationFamily& fam, double T,
                            const ExcludedSet& S, const SolverConfig& cfg,
                            SdRoute route = SdRoute::direct) {
    PeriodClass cls = classify_period(S, T);
    if (cls.verdict != PeriodVerdict::certified)
        throw std::domain_error(cls.verdict == PeriodVerdict::excluded
                                    ? "period lies in an excluded interval (mode k = " +
                                          std::to_string(cls.k) + ")"
                                    : "period lies outside the certified window");
    FourierField sd = route == SdRoute::direct ? duhamel_direct(u0, fam, T, cfg)
                                               : duhamel_normalform(u0, fam, T, cfg).sd;
    return apply_inverse_factor(fam.symbol(), T, sd);
}

struct ContractionRow {
    double amplitude = 0;
    double norm_in = 0, norm_out = 0;
    double factor = std::numeric_limits<double>::quiet_NaN();
    bool solver_failed = false;  // left the stable regime; treated as non-contracting
};

struct ContractionScan {
    std::vector<ContractionRow> rows;
    LineFit fit;                // log factor vs log amplitude (slope ≈ 1)
    double r0_low = 0.0;        // largest amplitude seen to contract
    double r0_high = std::numeric_limits<double>::infinity();  // smallest seen not to
    int bisection_steps = 0;
};

namespace detail {
inline ContractionRow contraction_probe(const FourierField& shape, double amplitude,
                                        const EquationFamily& fam, double T,
                                        const ExcludedSet& S, SobolevIndex s,
                                        const SolverConfig& cfg) {
    ContractionRow row;
    row.amplitude = amplitude;
    FourierField u0 = amplitude * shape;
    row.norm_in = sobolev_norm(u0, s);
    try {
        FourierField ku = apply_K(u0, fam, T, S, cfg);
        row.norm_out = sobolev_norm(ku, s);
        row.factor = row.norm_out / row.norm_in;
    } catch (const solver_error&) {
        row.solver_failed = true;
    } catch (const std::invalid_argument&) {  // CFL rejection at large amplitude
        row.solver_failed = true;
    }
    return row;
}
}  // namespace detail

/** Amplitude ladder at a fixed certified period: one random shape scaled per
 *  rung. When the ladder brackets the contraction threshold, six bisection
 *  steps (geometric midpoints) tighten [r0_low, r0_high]; with every rung
 *  contracting the upper end stays unbounded. */
inline ContractionScan contraction_scan(const EquationFamily& fam, double T,
                                        const ExcludedSet& S, SobolevIndex s,
                                        const std::vector<double>& amplitudes, double decay,
                                        std::uint64_t seed, const SolverConfig& cfg) {
    if (amplitudes.size() < 2) throw std::invalid_argument("amplitude ladder needs >= 2 rungs");
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        if (!(amplitudes[i] > 0.0)) throw std::invalid_argument("amplitudes must be positive");
        if (i && !(amplitudes[i] < amplitudes[i - 1]))
            throw std::invalid_argument("amplitudes must strictly decrease");
    }
    FourierField shape = random_field(cfg.K, 1.0, decay, seed);

    ContractionScan scan;
    std::vector<double> lx, ly;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (double a : amplitudes) {
        ContractionRow row = detail::contraction_probe(shape, a, fam, T, S, s, cfg);
        scan.rows.push_back(row);
        bool contracting = !row.solver_failed && row.factor < 1.0;
        if (contracting) {
            lo = std::max(lo, a);
            lx.push_back(std::log(a));
            ly.push_back(std::log(row.factor));
        } else {
            hi = std::min(hi, a);
        }
    }
    if (lx.size() >= 2) scan.fit = fit_line(lx, ly);

    if (lo > 0.0 && std::isfinite(hi) && lo < hi) {
        for (int step = 0; step < 6; ++step) {
            double mid = std::sqrt(lo * hi);
            ContractionRow row = detail::contraction_probe(shape, mid, fam, T, S, s, cfg);
            scan.rows.push_back(row);
            bool contracting = !row.solver_failed && row.factor < 1.0;
            (contracting ? lo : hi) = mid;
            ++scan.bisection_steps;
        }
    }
    scan.r0_low = lo;
    scan.r0_high = hi;
    return scan;
}

struct IterateResult {
    std::vector<double> norms;  // ||u_n||_s including n = 0
    bool converged = false;     // dropped below tol
    bool diverged = false;      // grew past 10x the initial norm or solver abort
    int iterations = 0;
};

/** Picard iteration u_{n+1} = K(T) u_n. Quadratic smallness makes the decay
 *  super-geometric once the first factor is below one; divergence past 10x
 *  the initial norm (or a solver abort) is flagged rather than thrown. */
inline IterateResult iterate_K(const FourierField& u0, const EquationFamily& fam, double T,
                               const ExcludedSet& S, SobolevIndex s, int max_iter,
                               double tol, const SolverConfig& cfg) {
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    IterateResult res;
    FourierField u = u0;
    double n0 = sobolev_norm(u, s);
    res.norms.push_back(n0);
    for (int i = 0; i < max_iter; ++i) {
        try {
            u = apply_K(u, fam, T, S, cfg);
        } catch (const solver_error&) {
            res.diverged = true;
            break;
        }
        double n = sobolev_norm(u, s);
        res.norms.push_back(n);
        res.iterations = i + 1;
        if (n < tol) {
            res.converged = true;
            break;
        }
        if (n0 > 0.0 && n > 10.0 * n0) {
            res.diverged = true;
            break;
        }
    }
    return res;
}

struct SweepRow {
    double T = 0;
    double factor = 0;
    double exclusion_gap = 0;  // distance to the nearest excluded interval
    bool solver_failed = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    int outliers = 0;  // factors >= 1
};

/** Contraction factor across sampled certified periods, with the distance to
 *  the nearest excluded interval as a conditioning diagnostic (factors blow
 *  up as a period approaches an interval endpoint). */
inline SweepResult period_sweep(const EquationFamily& fam, const ExcludedSet& S, int count,
                                double amplitude, SobolevIndex s, double decay,
                                std::uint64_t seed, const SolverConfig& cfg,
                                int threads = 1) {
    std::vector<double> periods = sample_periods(S, count, seed);
    FourierField shape = random_field(cfg.K, 1.0, decay, seed);
    SweepResult res;
    res.rows.assign(periods.size(), SweepRow{});
    parallel_for(periods.size(), threads, [&](std::size_t i) {
        ContractionRow probe =
            detail::contraction_probe(shape, amplitude, fam, periods[i], S, s, cfg);
        res.rows[i] = SweepRow{periods[i], probe.factor, nearest_exclusion_gap(S, periods[i]),
                               probe.solver_failed};
    });
    for (const auto& row : res.rows)
        if (row.solver_failed || row.factor >= 1.0) ++res.outliers;
    return res;
}

}  // namespace dispersive
