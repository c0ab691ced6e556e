#pragma once
// Odd-order dispersion symbols ψ(k) = Σ_m α_m k^{r_m}, the associated
// diagonal propagator e^{iψ(k)t} and periodic inverse factor 1/(1 - e^{iψ(k)T}),
// and certified lower-bound witnesses for symbol families over coefficient
// boxes (leading coefficient bounded away from zero; |ψ(k)| >= β₂ for all
// k ≠ 0 uniformly over the box, established by a finite scan plus a tail
// certificate at the leading order).

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dispersive/common.hpp"
#include "dispersive/field.hpp"

namespace dispersive {

struct SymbolTerm {
    double alpha;  // real coefficient
    int order;     // positive odd integer
};

/** ψ(k) = Σ_m α_m k^{r_m} with strictly decreasing positive odd orders.
 *  Odd orders make ψ(-k) = -ψ(k) exactly, so diagonal multipliers built from
 *  ψ preserve conjugate symmetry of real fields. Non-odd or non-integer
 *  orders are rejected at construction. */
class LinearSymbol {
  public:
    explicit LinearSymbol(std::vector<SymbolTerm> terms) : terms_(std::move(terms)) {
        if (terms_.empty()) throw std::invalid_argument("symbol needs at least one term");
        int prev = std::numeric_limits<int>::max();
        for (const auto& t : terms_) {
            if (t.order < 1 || t.order % 2 == 0)
                throw std::invalid_argument("symbol orders must be positive odd integers");
            if (t.order >= prev) throw std::invalid_argument("symbol orders must strictly decrease");
            if (!std::isfinite(t.alpha)) throw std::invalid_argument("symbol coefficient not finite");
            prev = t.order;
        }
        if (terms_.front().alpha == 0.0)
            throw std::invalid_argument("leading symbol coefficient must be nonzero");
    }

    const std::vector<SymbolTerm>& terms() const noexcept { return terms_; }
    int leading_order() const noexcept { return terms_.front().order; }
    double leading_alpha() const noexcept { return terms_.front().alpha; }

    /** ψ(k) in extended precision; integer powers are exact (int128). */
    long double value_l(int k) const {
        long double s = 0.0L;
        for (const auto& t : terms_)
            s += static_cast<long double>(t.alpha) * static_cast<long double>(ipow(k, t.order));
        return s;
    }

    double value(int k) const { return static_cast<double>(value_l(k)); }

    std::string describe() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            if (i) os << (terms_[i].alpha < 0 ? " - " : " + ");
            else if (terms_[i].alpha < 0) os << "-";
            os << std::abs(terms_[i].alpha) << "*k^" << terms_[i].order;
        }
        return os.str();
    }

  private:
    std::vector<SymbolTerm> terms_;
};

// ---------------------------------------------------------------------------
// Diagonal multipliers. All phase products ψ(k)·t are reduced with the exact
// double-double path (see reduced_phase in common.hpp) — a plain product is
// off by more than the certified resonance gap well before k = 128.

inline cplx propagator_multiplier(const LinearSymbol& A, double t, int k) {
    return unit_phase_at(A.value_l(k), t);
}

inline constexpr double inverse_factor_guard = 1e-10;  // on |1 - e^{iψT}|

// |1 - e^{iθ}| = 2|sin(θ/2)| without cancellation.
inline double half_gap_sin(const LinearSymbol& A, double T, int k) {
    return std::sin(0.5 * reduced_phase(A.value_l(k), T));
}

inline double inverse_factor_magnitude(const LinearSymbol& A, double T, int k) {
    double s = std::abs(half_gap_sin(A, T, k));
    if (2.0 * s < inverse_factor_guard)
        throw resonance_error(k, T, "period is resonant for mode k = " + std::to_string(k));
    return 1.0 / (2.0 * s);
}

/** 1/(1 - e^{iψ(k)T}). 1 - e^{iθ} = 2 sin(θ/2) (sin(θ/2) - i cos(θ/2)), so the
 *  inverse is (sin(θ/2) + i cos(θ/2)) / (2 sin(θ/2)); magnitude 1/(2|sin(θ/2)|)
 *  = (1/√2)(1 - cos θ)^{-1/2}. Throws once the divisor drops below the guard. */
inline cplx inverse_factor_multiplier(const LinearSymbol& A, double T, int k) {
    double theta = reduced_phase(A.value_l(k), T);
    double s = std::sin(0.5 * theta);
    if (2.0 * std::abs(s) < inverse_factor_guard)
        throw resonance_error(k, T, "period is resonant for mode k = " + std::to_string(k));
    double c = std::cos(0.5 * theta);
    return {0.5, c / (2.0 * s)};
}

/** u0 -> S_L(t) u0, mode-wise e^{iψ(k)t}. */
inline FourierField apply_linear(const LinearSymbol& A, double t, const FourierField& f) {
    return apply_multiplier(f, [&](int k) { return propagator_multiplier(A, t, k); });
}

/** f -> (I - S_L(T))^{-1} f. Any mode |k| <= K within the singularity guard
 *  of a resonance aborts with the offending k. */
inline FourierField apply_inverse_factor(const LinearSymbol& A, double T, const FourierField& f) {
    return apply_multiplier(f, [&](int k) { return inverse_factor_multiplier(A, T, k); });
}

// ---------------------------------------------------------------------------
// Hypotheses over coefficient boxes.

/** Closed interval [lo, hi]; degenerate (lo == hi) pins a coefficient. */
struct CoeffInterval {
    double lo, hi;
    CoeffInterval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(lo <= hi)) throw std::invalid_argument("interval needs lo <= hi");
    }
    double sup_abs() const { return std::max(std::abs(lo), std::abs(hi)); }
    double inf_abs() const { return (lo <= 0.0 && 0.0 <= hi) ? 0.0 : std::min(std::abs(lo), std::abs(hi)); }
};

/** A family of symbols: fixed orders, coefficients ranging over a box. */
struct SymbolFamilyBox {
    std::vector<int> orders;            // strictly decreasing positive odd
    std::vector<CoeffInterval> boxes;   // one per order
};

/** Certified constants for a family box:
 *  - beta1: |α₁| > beta1 on the box (taken as half the infimum of |α₁|);
 *  - beta2: |ψ(k)| >= beta2 for every k ≠ 0 and every coefficient choice;
 *  - s_inf/s_sup: uniform bounds on |Σ α_m k^{r_m - r₁}| (the symbol divided
 *    by its leading power), used by the excluded-set constants;
 *  - sup_alpha_sum: Σ_m sup |α_m| over the box. */
struct HypothesesWitness {
    double beta1 = 0, beta2 = 0;
    double s_inf = 0, s_sup = 0;
    double sup_alpha_sum = 0;
    int k_scan_limit = 0;
    int beta2_argmin_k = 0;
};

struct HypothesesViolation {
    int k = 0;
    std::vector<double> alphas;  // a coefficient choice in the box with ψ(k) = 0
};

struct HypothesesResult {
    enum class Status { witness, violation, inconclusive } status;
    HypothesesWitness witness;      // valid when status == witness
    HypothesesViolation violation;  // valid when status == violation
    std::string detail;
};

/** Scan |k| <= k_scan_limit exactly (per-k range of the affine map α ↦ ψ(k)
 *  over the box is an interval computed coefficient-wise), then certify the
 *  tail: if (K+1)^{r₂-r₁} Σ_{m>=2} sup|α_m| <= inf|α₁|/2, every |k| > K has
 *  |Σ α_m k^{r_m-r₁}| >= inf|α₁|/2. Too small a scan limit is reported as
 *  inconclusive, which is distinct from finding a concrete violation. */
inline HypothesesResult check_hypotheses(const SymbolFamilyBox& fam, int k_scan_limit) {
    HypothesesResult res{HypothesesResult::Status::inconclusive, {}, {}, ""};
    const std::size_t M = fam.orders.size();
    if (M == 0 || M != fam.boxes.size())
        throw std::invalid_argument("family needs matching orders and boxes");
    for (std::size_t m = 0; m + 1 < M; ++m)
        if (fam.orders[m] <= fam.orders[m + 1])
            throw std::invalid_argument("family orders must strictly decrease");
    if (k_scan_limit < 1) throw std::invalid_argument("k_scan_limit must be >= 1");

    const double inf_a1 = fam.boxes[0].inf_abs();
    if (inf_a1 == 0.0) {
        // Leading coefficient can vanish: violation at k -> any; report k = 1
        // with the zero-leading corner (higher coefficients at box midpoints).
        res.status = HypothesesResult::Status::violation;
        res.violation.k = 0;
        res.violation.alphas.assign(M, 0.0);
        for (std::size_t m = 1; m < M; ++m)
            res.violation.alphas[m] = 0.5 * (fam.boxes[m].lo + fam.boxes[m].hi);
        res.detail = "leading coefficient box contains zero";
        return res;
    }

    double sup_tail = 0.0;  // Σ_{m>=2} sup|α_m|
    double sup_sum = fam.boxes[0].sup_abs();
    for (std::size_t m = 1; m < M; ++m) {
        sup_tail += fam.boxes[m].sup_abs();
        sup_sum += fam.boxes[m].sup_abs();
    }

    const int r1 = fam.orders[0];
    double g_inf_min = std::numeric_limits<double>::infinity();   // min_k inf_box |g(k)|
    double g_sup_max = 0.0;                                       // max_k sup_box |g(k)|
    double psi_inf_min = std::numeric_limits<double>::infinity(); // min_k inf_box |ψ(k)|
    int psi_argmin_k = 0;

    for (int k = 1; k <= k_scan_limit; ++k) {
        // g(k) = Σ α_m k^{r_m - r₁}; ψ(k) = k^{r₁} g(k). By oddness |ψ(-k)| =
        // |ψ(k)|, so positive k suffice. Range over the box per coefficient:
        double lo = 0.0, hi = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            double c = std::pow(static_cast<double>(k), fam.orders[m] - r1);  // k^{<=0}, exact-ish
            double a = fam.boxes[m].lo * c, b = fam.boxes[m].hi * c;
            lo += std::min(a, b);
            hi += std::max(a, b);
        }
        if (lo <= 0.0 && 0.0 <= hi) {
            // g(k) = 0 is attainable: produce concrete coefficients by linear
            // interpolation between the low and high corners (g is affine).
            res.status = HypothesesResult::Status::violation;
            res.violation.k = k;
            res.violation.alphas.assign(M, 0.0);
            double t = (hi > lo) ? (0.0 - lo) / (hi - lo) : 0.0;
            for (std::size_t m = 0; m < M; ++m) {
                double c = std::pow(static_cast<double>(k), fam.orders[m] - r1);
                double at_lo = (c >= 0) ? fam.boxes[m].lo : fam.boxes[m].hi;
                double at_hi = (c >= 0) ? fam.boxes[m].hi : fam.boxes[m].lo;
                res.violation.alphas[m] = at_lo + t * (at_hi - at_lo);
            }
            res.detail = "symbol vanishes at k = " + std::to_string(k);
            return res;
        }
        double inf_g = std::min(std::abs(lo), std::abs(hi));
        double sup_g = std::max(std::abs(lo), std::abs(hi));
        double kr1 = std::pow(static_cast<double>(k), r1);
        g_inf_min = std::min(g_inf_min, inf_g);
        g_sup_max = std::max(g_sup_max, sup_g);
        if (inf_g * kr1 < psi_inf_min) {
            psi_inf_min = inf_g * kr1;
            psi_argmin_k = k;
        }
    }

    // Tail certificate for |k| > k_scan_limit.
    double tail_lower = 0.5 * inf_a1;
    if (M > 1) {
        int r2 = fam.orders[1];
        double tail_term =
            std::pow(static_cast<double>(k_scan_limit) + 1.0, r2 - r1) * sup_tail;
        if (tail_term > 0.5 * inf_a1) {
            res.status = HypothesesResult::Status::inconclusive;
            res.detail = "k_scan_limit too small to certify the tail; need k with k^" +
                         std::to_string(r2 - r1) + " * " + std::to_string(sup_tail) +
                         " <= " + std::to_string(0.5 * inf_a1);
            return res;
        }
    }
    double tail_sup = fam.boxes[0].sup_abs() + (M > 1 ? 0.5 * inf_a1 : 0.0);
    double tail_psi = tail_lower * std::pow(static_cast<double>(k_scan_limit) + 1.0, r1);

    res.status = HypothesesResult::Status::witness;
    res.witness.beta1 = 0.5 * inf_a1;
    res.witness.beta2 = std::min(psi_inf_min, tail_psi);
    res.witness.beta2_argmin_k = (psi_inf_min <= tail_psi) ? psi_argmin_k : k_scan_limit + 1;
    res.witness.s_inf = std::min(g_inf_min, tail_lower);
    res.witness.s_sup = std::max(g_sup_max, tail_sup);
    res.witness.sup_alpha_sum = sup_sum;
    res.witness.k_scan_limit = k_scan_limit;
    return res;
}

}  // namespace dispersive
