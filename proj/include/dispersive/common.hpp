#pragma once
// Shared plumbing: error types, exact integer powers, phase-accurate complex
// exponentials, deterministic uniform draws, chunked parallel loops, and a
// tiny least-squares line fit used by the scaling experiments.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dispersive {

using cplx = std::complex<double>;
using int128 = __int128;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr long double pi_l = 3.141592653589793238462643383279502884L;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr long double two_pi_l = 2.0L * pi_l;

/** A period hit (or came within the singularity guard of) a resonance of
 *  mode k: |1 - e^{i psi(k) T}| below guard. */
struct resonance_error : std::runtime_error {
    int k;
    double period;
    resonance_error(int k_, double period_, const std::string& msg)
        : std::runtime_error(msg), k(k_), period(period_) {}
};

/** The time stepper detected NaN/Inf or runaway norm growth at time t. */
struct solver_error : std::runtime_error {
    double t;
    solver_error(double t_, const std::string& msg) : std::runtime_error(msg), t(t_) {}
};

// Exact k^e in 128-bit integers. Large enough for |k| <= 1000, e <= 7
// (1000^7 = 1e21 overflows int64 but not int128).
inline int128 ipow(int128 base, int exp) {
    int128 r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// Reduce an angle to [-pi, pi] in extended precision. Phase arguments reach
// ~1e11 (|psi| ~ 128^5, T ~ 2); double rounding of the product alone is ~1e-5
// rad there, far coarser than the certified resonance gaps, so products and
// reduction stay in long double throughout.
inline long double reduce_angle(long double theta) {
    return remainderl(theta, two_pi_l);
}

// e^{i theta} with long-double reduction.
inline cplx unit_phase(long double theta) {
    long double r = reduce_angle(theta);
    return {static_cast<double>(cosl(r)), static_cast<double>(sinl(r))};
}

namespace detail {

// Double-double helpers (error-free transformations).
struct dd {
    double hi = 0.0, lo = 0.0;
};

inline dd two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline dd two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline dd dd_add(dd a, dd b) {
    dd s = two_sum(a.hi, b.hi);
    return two_sum(s.hi, a.lo + b.lo + s.lo);
}

// 2π split to 106 bits (Cody–Waite style head/tail).
inline constexpr double two_pi_hi = 0x1.921fb54442d18p+2;
inline constexpr double two_pi_lo = 0x1.1a62633145c07p-52;

}  // namespace detail

/** ψ·t reduced to [-π, π] to ~1e-16 rad absolute, valid up to |ψ·t| ~ 1e15.
 *  Long-double products round at |ψt|·2⁻⁶³ (~1e-4 rad for a seventh-order
 *  symbol at k = 128), far coarser than certified resonance gaps; here the
 *  product is split exactly with fused multiply-adds and the nearest multiple
 *  of a 106-bit 2π is subtracted error-free. psi must carry at most 106
 *  mantissa bits (every long double does). */
inline double reduced_phase(long double psi, double t) {
    double p_hi = static_cast<double>(psi);
    double p_lo = static_cast<double>(psi - static_cast<long double>(p_hi));
    detail::dd x = detail::dd_add(detail::two_prod(p_hi, t), detail::two_prod(p_lo, t));
    for (int pass = 0; pass < 3; ++pass) {
        double n = std::nearbyint(x.hi / detail::two_pi_hi);
        if (n == 0.0) break;
        detail::dd a = detail::two_prod(n, -detail::two_pi_hi);
        detail::dd b = detail::two_prod(n, -detail::two_pi_lo);
        x = detail::dd_add(detail::dd_add(x, a), b);
    }
    if (x.hi > pi) x = detail::dd_add(x, {-detail::two_pi_hi, -detail::two_pi_lo});
    if (x.hi < -pi) x = detail::dd_add(x, {detail::two_pi_hi, detail::two_pi_lo});
    return x.hi;
}

/** e^{i ψ t} via the exact product reduction; use whenever t is an exact
 *  double (period membership, endpoint propagators, quadrature nodes). */
inline cplx unit_phase_at(long double psi, double t) {
    double r = reduced_phase(psi, t);
    return {std::cos(r), std::sin(r)};
}

// Deterministic uniform draw in [0, 1): fixed mapping from the engine's raw
// 64-bit output, independent of the standard library's distribution choices.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Run fn(i) for i in [0, n). With threads <= 1 this is a plain loop; with
// more, disjoint chunks run on worker threads. Results must be written to
// disjoint slots so the output is identical for any thread count.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::size_t chunk = (n + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

/** Least-squares line y = slope x + intercept with the usual OLS slope
 *  standard error and r^2; the scaling experiments fit in log-log space. */
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need >= 2 points with matching sizes");
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = y[i] - (f.slope * x[i] + f.intercept);
        ss_res += e * e;
    }
    f.r2 = (syy > 0) ? 1.0 - ss_res / syy : 1.0;
    if (n > 2) f.slope_stderr = std::sqrt(ss_res / (static_cast<double>(n) - 2.0) / sxx);
    return f;
}

}  // namespace dispersive
