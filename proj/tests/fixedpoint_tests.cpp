#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dispersive/fixedpoint.hpp"

using namespace dispersive;

namespace {

double rel_h4(const FourierField& a, const FourierField& b) {
    return sobolev_norm(a - b, 4.0) / sobolev_norm(b, 4.0);
}

// Third-order family: phases are mild enough that an RK4 step of 1e-3
// resolves every interaction-picture oscillation at K = 8.
EquationFamily fam() { return EquationFamily::kdv(); }

ExcludedSet kdv_set(int k_max = 16) {
    auto res = check_hypotheses(hypotheses_box(fam()), 64);
    REQUIRE(res.status == HypothesesResult::Status::witness);
    return build_excluded_set(fam().symbol(), res.witness, 1.0, 2.0, 1.5, 0.1, k_max);
}

// The sampled certified period with the widest margin to any excluded
// interval, so inverse factors stay mild and cross-route comparisons clean.
double roomy_period(const ExcludedSet& S) {
    auto Ts = sample_periods(S, 64, 20240601);
    REQUIRE(!Ts.empty());
    double best = Ts.front(), best_gap = -1.0;
    for (double T : Ts) {
        double g = nearest_exclusion_gap(S, T);
        if (g > best_gap) {
            best_gap = g;
            best = T;
        }
    }
    REQUIRE(best_gap > 0.0);
    return best;
}

SolverConfig small_cfg(double dt = 1e-3) {
    SolverConfig cfg;
    cfg.K = 8;
    cfg.dt = dt;
    return cfg;
}

}  // namespace

TEST_CASE("period map rejects periods without a certificate", "[fixedpoint]") {
    ExcludedSet S = kdv_set();
    SolverConfig cfg = small_cfg();
    auto u0 = random_field(cfg.K, 1e-3, 6.0, 5);

    // Dead center of an excluded interval (k = 2: 2pi n / 8, n = 2).
    CHECK_THROWS_AS(apply_K(u0, fam(), pi / 2.0, S, cfg), std::domain_error);
    // Outside the window on both sides.
    CHECK_THROWS_AS(apply_K(u0, fam(), 0.5, S, cfg), std::domain_error);
    CHECK_THROWS_AS(apply_K(u0, fam(), 2.5, S, cfg), std::domain_error);
}

TEST_CASE("period map output satisfies the defining affine identity", "[fixedpoint]") {
    ExcludedSet S = kdv_set();
    SolverConfig cfg = small_cfg();
    double T = roomy_period(S);
    auto u0 = random_field(cfg.K, 1e-3, 6.0, 11);

    FourierField w = apply_K(u0, fam(), T, S, cfg);
    FourierField sd = duhamel_direct(u0, fam(), T, cfg);
    // w = (I - S_L(T))^{-1} sd, so w - S_L(T) w must reproduce sd. The
    // half-angle form of the inverse multiplier makes this exact per mode up
    // to rounding amplified by the certified inverse-factor bound.
    FourierField back = w - apply_linear(fam().symbol(), T, w);
    CHECK(rel_h4(back, sd) < 1e-10);
    CHECK(w.coeff(0) == cplx{0.0, 0.0});
    CHECK(sobolev_norm(w, 4.0) > 0.0);
}

TEST_CASE("direct and normal-form routes agree through the inverse factor", "[fixedpoint]") {
    ExcludedSet S = kdv_set();
    SolverConfig cfg = small_cfg(1e-4);
    double T = roomy_period(S);
    auto u0 = random_field(cfg.K, 5e-3, 6.0, 11);

    FourierField kd = apply_K(u0, fam(), T, S, cfg, SdRoute::direct);
    FourierField kn = apply_K(u0, fam(), T, S, cfg, SdRoute::normalform);
    CHECK(sobolev_norm(kd, 4.0) > 0.0);
    CHECK(rel_h4(kn, kd) < 1e-5);
}

TEST_CASE("contraction factor scales linearly with amplitude", "[fixedpoint]") {
    ExcludedSet S = kdv_set();
    SolverConfig cfg = small_cfg();
    double T = roomy_period(S);
    std::vector<double> amps{1e-3, 3e-4, 1e-4, 3e-5, 1e-5};

    ContractionScan scan = contraction_scan(fam(), T, S, 4.0, amps, 6.0, 17, cfg);
    REQUIRE(scan.rows.size() == amps.size());
    for (const auto& row : scan.rows) {
        CHECK_FALSE(row.solver_failed);
        CHECK(row.factor < 1.0);
        CHECK(row.factor > 0.0);
        CHECK(row.norm_in == Catch::Approx(row.amplitude * scan.rows[0].norm_in / amps[0]));
    }
    // ||K u|| is quadratic in u, so factor ~ ||u||: unit slope on log-log.
    CHECK(scan.fit.slope == Catch::Approx(1.0).margin(0.1));
    CHECK(scan.fit.r2 > 0.999);
    // Every rung contracted: threshold bracket stays open above.
    CHECK(scan.r0_low == Catch::Approx(1e-3));
    CHECK(std::isinf(scan.r0_high));
    CHECK(scan.bisection_steps == 0);
}

TEST_CASE("bisection tightens the contraction threshold bracket", "[fixedpoint]") {
    ExcludedSet S = kdv_set();
    SolverConfig cfg = small_cfg();
    double T = roomy_period(S);
    // The top rung violates the step-size stability gate, which the scan
    // treats as non-contracting; the bottom rungs contract. Six geometric
    // bisection steps then shrink the bracket between them.
    std::vector<double> amps{1e3, 1e-4, 1e-5};

    ContractionScan scan = contraction_scan(fam(), T, S, 4.0, amps, 6.0, 17, cfg);
    REQUIRE(scan.rows.size() == amps.size() + 6);
    CHECK(scan.rows[0].solver_failed);
    CHECK_FALSE(scan.rows[1].solver_failed);
    CHECK(scan.rows[1].factor < 1.0);
    CHECK(scan.bisection_steps == 6);
    CHECK(scan.r0_low >= 1e-4);
    CHECK(scan.r0_high <= 1e3);
    CHECK(scan.r0_low < scan.r0_high);
    CHECK(std::isfinite(scan.r0_high));
    // Bracket width shrinks by the bisection ratio: hi/lo = (1e3/1e-4)^(1/64).
    CHECK(scan.r0_high / scan.r0_low ==
          Catch::Approx(std::pow(1e7, 1.0 / 64.0)).epsilon(1e-9));
}

TEST_CASE("Picard iteration collapses to zero on a certified period", "[fixedpoint]") {
    ExcludedSet S = kdv_set();
    SolverConfig cfg = small_cfg();
    double T = roomy_period(S);
    auto u0 = random_field(cfg.K, 1e-3, 6.0, 23);

    IterateResult res = iterate_K(u0, fam(), T, S, 4.0, 50, 1e-12, cfg);
    CHECK(res.converged);
    CHECK_FALSE(res.diverged);
    CHECK(res.iterations < 50);
    REQUIRE(res.norms.size() >= 3);
    CHECK(res.norms.front() == Catch::Approx(sobolev_norm(u0, 4.0)));
    CHECK(res.norms.back() < 1e-12);
    // Quadratic smallness: super-geometric decay, every step strictly down.
    for (std::size_t i = 1; i < res.norms.size(); ++i) CHECK(res.norms[i] < res.norms[i - 1]);
}

TEST_CASE("period sweep contracts at every sampled certified period", "[fixedpoint]") {
    ExcludedSet S = kdv_set();
    SolverConfig cfg = small_cfg();

    SweepResult sweep = period_sweep(fam(), S, 12, 1e-3, 4.0, 6.0, 31, cfg);
    REQUIRE(sweep.rows.size() == 12);
    CHECK(sweep.outliers == 0);
    for (const auto& row : sweep.rows) {
        CHECK_FALSE(row.solver_failed);
        CHECK(row.factor < 1.0);
        CHECK(row.factor > 0.0);
        CHECK(row.exclusion_gap > 0.0);
        CHECK(row.T >= S.T1);
        CHECK(row.T <= S.T2);
    }

    SweepResult again = period_sweep(fam(), S, 12, 1e-3, 4.0, 6.0, 31, cfg);
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
        CHECK(again.rows[i].T == sweep.rows[i].T);
        CHECK(again.rows[i].factor == sweep.rows[i].factor);
    }
}

TEST_CASE("fixed-point entry points validate their inputs", "[fixedpoint]") {
    ExcludedSet S = kdv_set();
    SolverConfig cfg = small_cfg();
    double T = roomy_period(S);
    auto u0 = random_field(cfg.K, 1e-3, 6.0, 5);

    CHECK_THROWS_AS(iterate_K(u0, fam(), T, S, 4.0, 0, 1e-12, cfg), std::invalid_argument);
    CHECK_THROWS_AS(contraction_scan(fam(), T, S, 4.0, {1e-3}, 6.0, 1, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(contraction_scan(fam(), T, S, 4.0, {1e-3, 1e-3}, 6.0, 1, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(contraction_scan(fam(), T, S, 4.0, {1e-3, -1e-4}, 6.0, 1, cfg),
                    std::invalid_argument);
}
