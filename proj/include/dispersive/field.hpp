#pragma once
// Truncated Fourier coefficients of 2π-periodic, real-valued, mean-zero
// fields, plus their Sobolev calculus.
//
// A field holds c_k for |k| <= K with c_0 = 0 and c_{-k} = conj(c_k); the
// write API only exposes modes k >= 1 and mirrors the conjugate, so the
// invariants hold by construction. Norms are homogeneous coefficient sums
// (Σ_{k≠0} |k|^{2s} |c_k|^2)^{1/2} with no 2π factors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dispersive/common.hpp"

namespace dispersive {

/** Sobolev smoothness index; negative orders are not supported. */
struct SobolevIndex {
    double order;
    SobolevIndex(double s) : order(s) {
        if (!(s >= 0.0)) throw std::invalid_argument("Sobolev order must be >= 0");
    }
};

class FourierField {
  public:
    explicit FourierField(int K) : K_(K) {
        if (K < 1 || K > 512) throw std::invalid_argument("field truncation K must be in [1, 512]");
        c_.assign(2 * static_cast<std::size_t>(K) + 1, cplx{0.0, 0.0});
    }

    int K() const noexcept { return K_; }

    cplx coeff(int k) const {
        if (k < -K_ || k > K_) throw std::out_of_range("mode index outside [-K, K]");
        return c_[static_cast<std::size_t>(k + K_)];
    }

    /** Set c_k for k >= 1; c_{-k} = conj(v) is written alongside. */
    void set_mode(int k, cplx v) {
        if (k < 1 || k > K_) throw std::out_of_range("set_mode expects 1 <= k <= K");
        c_[static_cast<std::size_t>(K_ + k)] = v;
        c_[static_cast<std::size_t>(K_ - k)] = std::conj(v);
    }

    FourierField& operator+=(const FourierField& o) {
        check_same_K(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    FourierField& operator-=(const FourierField& o) {
        check_same_K(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    FourierField& operator*=(double a) {
        for (auto& v : c_) v *= a;
        return *this;
    }

    friend FourierField operator+(FourierField f, const FourierField& g) { return f += g; }
    friend FourierField operator-(FourierField f, const FourierField& g) { return f -= g; }
    friend FourierField operator*(double a, FourierField f) { return f *= a; }

  private:
    void check_same_K(const FourierField& o) const {
        if (K_ != o.K_) throw std::invalid_argument("field truncations K do not match");
    }

    int K_;
    std::vector<cplx> c_;  // c_[K_ + k], k in [-K, K]
};

/** Throws unless c_0 = 0, c_{-k} = conj(c_k) exactly, and all entries are
 *  finite. The write API preserves these; loads and debug paths re-check. */
inline void validate(const FourierField& f) {
    if (f.coeff(0) != cplx{0.0, 0.0}) throw std::invalid_argument("field mean is not zero");
    for (int k = 1; k <= f.K(); ++k) {
        cplx a = f.coeff(k), b = f.coeff(-k);
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
            throw std::invalid_argument("non-finite coefficient");
        if (b != std::conj(a)) throw std::invalid_argument("conjugate symmetry violated");
    }
}

/** Apply a diagonal multiplier m(k), given for k >= 1; the k <= -1 half gets
 *  conj(m(k)), so conjugate symmetry is preserved by construction. */
template <typename Fn>
FourierField apply_multiplier(const FourierField& f, Fn&& m) {
    FourierField out(f.K());
    for (int k = 1; k <= f.K(); ++k) out.set_mode(k, static_cast<cplx>(m(k)) * f.coeff(k));
    return out;
}

inline double sobolev_norm(const FourierField& f, SobolevIndex s) {
    double sum = 0.0;
    for (int k = 1; k <= f.K(); ++k) {
        double w = std::pow(static_cast<double>(k), 2.0 * s.order);
        sum += 2.0 * w * std::norm(f.coeff(k));
    }
    return std::sqrt(sum);
}

/** n-th spatial derivative: c_k -> (ik)^n c_k. */
inline FourierField derivative(const FourierField& f, int n) {
    if (n < 1 || n > 8) throw std::invalid_argument("derivative order must be in [1, 8]");
    static const cplx icycle[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    cplx in = icycle[n % 4];
    return apply_multiplier(f, [&](int k) {
        return in * static_cast<double>(ipow(k, n));
    });
}

/** Pointwise product of the two underlying fields, as an exact truncated
 *  convolution: (fg)_k = Σ_j f_{k-j} g_j over |j| <= K, |k-j| <= K. Dense
 *  O(K^2), alias-free; the k = 0 output (mean) is dropped. */
inline FourierField product(const FourierField& f, const FourierField& g) {
    if (f.K() != g.K()) throw std::invalid_argument("field truncations K do not match");
    const int K = f.K();
    FourierField out(K);
    for (int k = 1; k <= K; ++k) {
        cplx sum{0.0, 0.0};
        for (int j = std::max(-K, k - K); j <= K; ++j) sum += f.coeff(k - j) * g.coeff(j);
        out.set_mode(k, sum);
    }
    return out;
}

/** Product with collocation-style aliasing: the convolution index wraps
 *  modulo 2K+1, reproducing what an unpadded (2K+1)-point grid would do.
 *  Kept for demonstrating aliasing; the solver default is the exact form. */
inline FourierField aliased_product(const FourierField& f, const FourierField& g) {
    if (f.K() != g.K()) throw std::invalid_argument("field truncations K do not match");
    const int K = f.K();
    const int N = 2 * K + 1;
    FourierField out(K);
    for (int k = 1; k <= K; ++k) {
        cplx sum{0.0, 0.0};
        for (int j = -K; j <= K; ++j) {
            int m = k - j;
            if (m > K) m -= N;
            if (m < -K) m += N;
            sum += f.coeff(m) * g.coeff(j);
        }
        out.set_mode(k, sum);
    }
    return out;
}

/** Spatial reflection u(x) -> u(-x): c_k -> c_{-k} = conj(c_k). */
inline FourierField reflect(const FourierField& f) {
    FourierField out(f.K());
    for (int k = 1; k <= f.K(); ++k) out.set_mode(k, std::conj(f.coeff(k)));
    return out;
}

/** Random field with |c_k| = amplitude * k^{-decay} and uniform phases from
 *  the seed; draws use a fixed engine-to-[0,1) mapping, so coefficients are
 *  reproducible bit-for-bit across runs and platforms with IEEE doubles. */
inline FourierField random_field(int K, double amplitude, double decay, std::uint64_t seed) {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
        throw std::invalid_argument("amplitude must be finite and >= 0");
    if (!std::isfinite(decay)) throw std::invalid_argument("decay must be finite");
    std::mt19937_64 gen(seed);
    FourierField f(K);
    for (int k = 1; k <= K; ++k) {
        double phase = two_pi * uniform01(gen);
        double mag = amplitude * std::pow(static_cast<double>(k), -decay);
        f.set_mode(k, mag * cplx{std::cos(phase), std::sin(phase)});
    }
    return f;
}

// --- JSON field format: {"K": K, "coeffs": [[k, re, im], ...]} with k >= 1
// only; negative modes are implied by conjugate symmetry and the mean is
// structurally zero. Loaders reject out-of-range, duplicate, or non-finite
// entries.

inline nlohmann::json to_json(const FourierField& f) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (int k = 1; k <= f.K(); ++k) {
        cplx c = f.coeff(k);
        coeffs.push_back({k, c.real(), c.imag()});
    }
    return {{"K", f.K()}, {"coeffs", std::move(coeffs)}};
}

inline FourierField field_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("K") || !j.contains("coeffs"))
        throw std::invalid_argument("field JSON must be {\"K\":..., \"coeffs\":[...]}");
    FourierField f(j.at("K").get<int>());
    std::set<int> seen;
    for (const auto& row : j.at("coeffs")) {
        if (!row.is_array() || row.size() != 3)
            throw std::invalid_argument("field JSON coefficient rows are [k, re, im]");
        int k = row[0].get<int>();
        double re = row[1].get<double>(), im = row[2].get<double>();
        if (k < 1 || k > f.K()) throw std::invalid_argument("field JSON mode index outside [1, K]");
        if (!seen.insert(k).second) throw std::invalid_argument("field JSON duplicate mode index");
        if (!std::isfinite(re) || !std::isfinite(im))
            throw std::invalid_argument("field JSON non-finite coefficient");
        f.set_mode(k, {re, im});
    }
    return f;
}

inline void save_field(const FourierField& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << to_json(f).dump(2) << "\n";
}

inline FourierField load_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    nlohmann::json j;
    in >> j;
    return field_from_json(j);
}

}  // namespace dispersive
