// Acceptance gate: one pass/fail line per criterion, exit 0 iff all ten pass.
//
// Every tolerance is pinned as a named constant below. Heavy criteria print
// their line as soon as they finish so progress is visible; total runtime is
// a few minutes, dominated by the K = 64 route-equivalence runs.
//
// Usage: acceptance [numbers...]  — run only the listed criteria (dev aid);
// no arguments runs all ten.

#include <dispersive/cli.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace dispersive;
namespace fs = std::filesystem;
using steady = std::chrono::steady_clock;

// --- pinned tolerances ------------------------------------------------------
constexpr double kIdentityRuntimeCap = 5.0;     // s, criterion 1
constexpr double kSigmaGainCap = 2.0;           // |k^2/sigma|
constexpr double kTauGainCap = 2.0;             // |k^4/tau|
constexpr double kBDenominatorCap = 4.0;        // |k^3/(j(k-j)sigma)|
constexpr double kKdvGainCap = 2.0;             // |k^2/(kj(k-j))|
constexpr double kKawaharaGainCap = 2.0;        // |k^2/(sigma +- 3theta/5)|
constexpr double kRemovedBudget = 0.1;          // delta, criterion 3
constexpr double kTailCap = 0.01;               // uncertified tail measure
constexpr double kConstantRelTol = 1e-12;       // c1 = sqrt(2)/(c0 s_inf)
constexpr double kCertifyRatioCap = 1.0 + 1e-9; // certified gap ratio
constexpr double kRoundTripTol = 1e-12;         // criterion 4, relative H^4
constexpr double kLinearFlowTol = 1e-12;        // criterion 5a
constexpr double kOrderLo = 3.7, kOrderHi = 4.3;// criterion 5b
constexpr double kMeanTol = 1e-14;              // criterion 5c
constexpr double kL2DriftTol = 1e-8;            // criterion 5d, relative
constexpr double kRouteRelTol = 1e-6;           // criterion 6, relative H^4
constexpr double kRouteFamilyBudget = 300.0;    // s per family, criterion 6
constexpr double kSmoothingSlopeTol = 0.1;      // criterion 7, around 2.0
constexpr double kRatioSpreadCap = 2.0;         // criterion 7, max/min
constexpr double kContractionSlopeTol = 0.15;   // criterion 8, around 1.0
constexpr double kIterateTol = 1e-12;           // criterion 8 fixed point
constexpr int kIterateCap = 50;                 // criterion 8 iterations
constexpr double kHomogeneityTol = 0.05;        // criterion 9, around 2 and 3
// ----------------------------------------------------------------------------

double secs_since(steady::time_point t0) {
    return std::chrono::duration<double>(steady::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    va_list ap;
    va_start(ap, f);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

struct FamilyCase {
    const char* name;
    EquationFamily fam;
};

std::vector<FamilyCase> all_families() {
    return {{"fifth", EquationFamily::fifth()},
            {"kawahara", EquationFamily::kawahara(0.5)},
            {"seventh", EquationFamily::seventh()},
            {"kdv", EquationFamily::kdv()}};
}

/** Zero-width coefficient box around one concrete symbol. */
SymbolFamilyBox exact_box(const EquationFamily& fam) {
    SymbolFamilyBox box;
    LinearSymbol A = fam.symbol();
    for (const auto& t : A.terms()) {
        box.orders.push_back(t.order);
        box.boxes.emplace_back(t.alpha, t.alpha);
    }
    return box;
}

struct CertifiedFamily {
    FamilyCase fc;
    HypothesesWitness witness;
    ExcludedSet set;
};

/** Excluded sets for all four families at the pinned construction parameters;
 *  built once and shared by criteria 3, 4, and 8. */
const std::vector<CertifiedFamily>& certified_families() {
    static const std::vector<CertifiedFamily> cache = [] {
        std::vector<CertifiedFamily> out;
        for (const auto& fc : all_families()) {
            HypothesesResult res = check_hypotheses(exact_box(fc.fam), 256);
            if (res.status != HypothesesResult::Status::witness)
                throw std::runtime_error(std::string("hypotheses not certified for ") + fc.name +
                                         ": " + res.detail);
            ExcludedSet S =
                build_excluded_set(fc.fam.symbol(), res.witness, 1.0, 2.0, 1.5, kRemovedBudget, 128);
            out.push_back({fc, res.witness, S});
        }
        return out;
    }();
    return cache;
}

double rel_h4(const FourierField& a, const FourierField& b) {
    return sobolev_norm(a - b, 4.0) / sobolev_norm(b, 4.0);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// --- criterion bodies: return pass flag, fill a metrics string ---------------

bool crit1_identities(std::string& m) {
    auto t0 = steady::now();
    IdentityScan scan = scan_phase_identities(500);
    double secs = secs_since(t0);
    m = fmt("pairs=%lld failures=%d runtime=%.2fs", scan.pairs_checked, scan.ok ? 0 : 1, secs);
    return scan.ok && scan.pairs_checked > 0 && secs < kIdentityRuntimeCap;
}

bool crit2_denominators(std::string& m) {
    DenominatorScan pos = denominator_bounds(500, 0.5);
    DenominatorScan neg = denominator_bounds(500, -0.5);
    bool pass = pos.pass && neg.pass && pos.positivity_ok &&
                pos.max_sigma_gain <= kSigmaGainCap && pos.max_tau_gain <= kTauGainCap &&
                pos.max_b_denominator <= kBDenominatorCap && pos.max_kdv_gain <= kKdvGainCap &&
                pos.max_kawahara_gain <= kKawaharaGainCap &&
                neg.max_kawahara_gain <= kKawaharaGainCap;
    m = fmt("sigma=%.4f tau=%.4f b=%.4f kdv=%.4f kawahara(+/-)=%.4f/%.4f",
            pos.max_sigma_gain, pos.max_tau_gain, pos.max_b_denominator, pos.max_kdv_gain,
            pos.max_kawahara_gain, neg.max_kawahara_gain);
    return pass;
}

bool crit3_excluded_sets(std::string& m) {
    bool pass = true;
    double worst_removed = 0, worst_tail = 0, worst_ratio = 0;
    int failures = 0;
    for (const auto& cf : certified_families()) {
        const ExcludedSet& S = cf.set;
        pass = pass && S.removed_measure <= kRemovedBudget + 1e-12 && S.uncertified_tail < kTailCap &&
               std::abs(S.c1 * S.c0 * cf.witness.s_inf - std::sqrt(2.0)) <=
                   kConstantRelTol * std::sqrt(2.0);
        worst_removed = std::max(worst_removed, S.removed_measure);
        worst_tail = std::max(worst_tail, S.uncertified_tail);
        // The witness floors s_inf at inf|alpha_1|/2 for its tail certificate;
        // the sharp symbol infimum is 1 for the pure-power families and 1/2
        // for kawahara at theta = 1/2. Certify against the sharp constant
        // c1 = sqrt(2)/(c0 * s_inf_sharp) by rescaling the reported ratio.
        double s_inf_sharp = cf.fc.fam.kind == FamilyKind::kawahara ? 0.5 : 1.0;
        double c1_sharp = std::sqrt(2.0) / (S.c0 * s_inf_sharp);
        for (double T : sample_periods(S, 100, 20260814)) {
            CertifyReport rep = certify_bound(cf.fc.fam.symbol(), S, T, 128);
            double ratio_sharp = rep.max_ratio * S.c1 / c1_sharp;
            if (!rep.pass || rep.skipped || ratio_sharp > kCertifyRatioCap) ++failures;
            worst_ratio = std::max(worst_ratio, ratio_sharp);
        }
    }
    m = fmt("removed<=%.4f tail<=%.6f certify: 400 periods, %d failures, max sharp ratio=%.4f",
            worst_removed, worst_tail, failures, worst_ratio);
    return pass && failures == 0;
}

bool crit4_round_trip(std::string& m) {
    double worst = 0;
    int seeds = 0;
    for (const auto& cf : certified_families()) {
        LinearSymbol A = cf.fc.fam.symbol();
        std::vector<double> periods = sample_periods(cf.set, 5, 99);
        for (int i = 0; i < 5; ++i, ++seeds) {
            FourierField u0 = random_field(64, 1e-2, 3.0, 1000 + static_cast<std::uint64_t>(seeds));
            FourierField w = u0 - apply_linear(A, periods[static_cast<std::size_t>(i)], u0);
            FourierField back = apply_inverse_factor(A, periods[static_cast<std::size_t>(i)], w);
            worst = std::max(worst, rel_h4(back, u0));
        }
    }
    m = fmt("20 seeds across 4 families, max relative error %.3e", worst);
    return seeds == 20 && worst <= kRoundTripTol;
}

struct RichardsonCase {
    const char* name;
    EquationFamily fam;
    int K;
    double amp, decay, T;
    long long base_steps;
};

bool crit5_solver(std::string& m) {
    // (a) linear flow: with the nonlinearity off, the interaction variable is
    // bit-exact constant and the reconstructed field matches the analytic
    // propagator (independent std::polar path) on low modes.
    double worst_linear = 0;
    for (const auto& fc : all_families()) {
        EquationFamily lin = fc.fam;
        lin.nu = 0.0;
        FourierField u0 = random_field(64, 1e-2, 8.0, 5);
        SolverConfig cfg;
        cfg.K = 64;
        cfg.dt = 1e-3;
        cfg.snapshot_stride = 1 << 20;
        Trajectory traj = solve(u0, lin, 0.25, cfg);
        worst_linear = std::max(worst_linear, rel_h4(traj.v.back(), u0));
        FourierField uT = traj.u_at(traj.v.size() - 1);
        double t_end = traj.times.back();
        LinearSymbol A = lin.symbol();
        for (int k = 1; k <= 4; ++k) {
            cplx expect = std::polar(1.0, static_cast<double>(A.value_l(k)) * t_end) * u0.coeff(k);
            worst_linear = std::max(worst_linear, std::abs(uT.coeff(k) - expect) / std::abs(u0.coeff(k)));
        }
    }
    bool pass = worst_linear <= kLinearFlowTol;

    // (b) Richardson triplet per family: step counts chosen so the largest
    // nonlinear phase satisfies h|Phi| < 1 on the coarsest run.
    std::vector<RichardsonCase> rich = {
        {"fifth", EquationFamily::fifth(), 8, 0.3, 2.0, 0.1, 4000},
        {"kawahara", EquationFamily::kawahara(0.5), 8, 0.3, 2.0, 0.1, 4000},
        {"seventh", EquationFamily::seventh(), 6, 0.5, 2.0, 0.02, 18000},
        {"kdv", EquationFamily::kdv(), 8, 0.3, 2.0, 0.5, 1000},
    };
    double order_lo = std::numeric_limits<double>::infinity(), order_hi = 0;
    for (const auto& rc : rich) {
        FourierField u0 = random_field(rc.K, rc.amp, rc.decay, 21);
        std::vector<FourierField> ends;
        for (int lvl = 0; lvl < 3; ++lvl) {
            SolverConfig cfg;
            cfg.K = rc.K;
            cfg.dt = rc.T;  // steps_override governs the step count
            cfg.steps_override = rc.base_steps << lvl;
            cfg.snapshot_stride = 1 << 30;
            ends.push_back(solve(u0, rc.fam, rc.T, cfg).v.back());
        }
        double e1 = sobolev_norm(ends[0] - ends[1], 4.0);
        double e2 = sobolev_norm(ends[1] - ends[2], 4.0);
        double order = std::log2(e1 / e2);
        order_lo = std::min(order_lo, order);
        order_hi = std::max(order_hi, order);
        pass = pass && order >= kOrderLo && order <= kOrderHi && e1 > 0 && e2 > 0;
    }

    // (c)+(d) conservation at the pinned resolution, all four families.
    double worst_mean = 0, worst_drift = 0;
    for (const auto& fc : all_families()) {
        FourierField u0 = random_field(64, 1e-2, 8.0, 11);
        SolverConfig cfg;
        cfg.K = 64;
        cfg.dt = 1e-3;
        cfg.snapshot_stride = 50;
        Trajectory traj = solve(u0, fc.fam, 1.0, cfg);
        auto diag = conserved_diagnostics(traj);
        double l2_0 = diag.front().l2;
        for (const auto& row : diag) {
            worst_mean = std::max(worst_mean, std::abs(row.mean));
            worst_drift = std::max(worst_drift, std::abs(row.l2 - l2_0) / l2_0);
        }
    }
    pass = pass && worst_mean <= kMeanTol && worst_drift <= kL2DriftTol;
    m = fmt("linear=%.2e order=[%.3f,%.3f] mean=%.2e l2_drift=%.2e", worst_linear, order_lo,
            order_hi, worst_mean, worst_drift);
    return pass;
}

bool crit6_route_equivalence(std::string& m) {
    struct Cell {
        const char* name;
        EquationFamily fam;
        double dt, decay;
    };
    // Reference resolution per family: dt resolving the oscillatory quadrature
    // (quad refine under 1e-6) and data regularity keeping the direct route's
    // aliased high-frequency pairs below the comparison floor. The seventh-order
    // symbol needs both knobs: its phases grow like k^6 while its smoothing
    // term is 1/Phi-suppressed, so the comparison is floored by solver noise
    // unless the tail decays faster.
    std::vector<Cell> cells = {
        {"fifth", EquationFamily::fifth(), 1e-4, 8.0},
        {"kawahara", EquationFamily::kawahara(0.5), 5e-5, 8.0},
        {"seventh", EquationFamily::seventh(), 2e-5, 12.0},
        {"kdv", EquationFamily::kdv(), 1e-4, 8.0},
    };
    bool pass = true;
    double worst_rel = 0, worst_secs = 0;
    for (const auto& c : cells) {
        auto t0 = steady::now();
        FourierField u0 = random_field(64, 1e-2, c.decay, 7);
        SolverConfig cfg;
        cfg.K = 64;
        cfg.dt = c.dt;
        FourierField direct = duhamel_direct(u0, c.fam, 0.5, cfg);
        NormalFormResult nf = duhamel_normalform(u0, c.fam, 0.5, cfg);
        double rel = rel_h4(nf.sd, direct);
        double secs = secs_since(t0);
        pass = pass && rel <= kRouteRelTol && secs < kRouteFamilyBudget;
        worst_rel = std::max(worst_rel, rel);
        worst_secs = std::max(worst_secs, secs);
        std::printf("        %-8s rel=%.3e quad_refine=%.1e %.0fs\n", c.name, rel,
                    nf.quad_refine_rel, secs);
        std::fflush(stdout);
    }
    m = fmt("max rel=%.3e (tol %.0e), slowest family %.0fs", worst_rel, kRouteRelTol, worst_secs);
    return pass;
}

bool crit7_smoothing(std::string& m) {
    struct Cell {
        const char* name;
        EquationFamily fam;
        double s, p, ptilde, q;
        bool check_slope;
    };
    std::vector<Cell> cells = {
        {"fifth", EquationFamily::fifth(), 6, 2, 0, 1, true},
        {"kawahara", EquationFamily::kawahara(0.5), 6, 2, 0, 1, true},
        {"seventh", EquationFamily::seventh(), 6, 4, 0, 1, true},
        {"kdv", EquationFamily::kdv(), 4, 2, 2, 1, false},
    };
    bool pass = true;
    std::string detail;
    for (const auto& c : cells) {
        SolverConfig cfg;
        cfg.K = 32;
        cfg.dt = 1e-3;
        SmoothingParams params;
        params.s = c.s;
        params.p = c.p;
        params.ptilde = c.ptilde;
        params.q = c.q;
        params.T = 1.0;
        params.decay = 8.0;
        params.seed = 7;
        params.amplitudes = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
        SmoothingReport rep = smoothing_report(c.fam, cfg, params);
        double lo = std::numeric_limits<double>::infinity(), hi = 0;
        for (const auto& row : rep.rows) {
            lo = std::min(lo, row.ratio);
            hi = std::max(hi, row.ratio);
        }
        double spread = hi / lo;
        bool ok = std::isfinite(spread) && lo > 0 && spread < kRatioSpreadCap;
        if (c.check_slope) ok = ok && std::abs(rep.fit.slope - 2.0) <= kSmoothingSlopeTol;
        pass = pass && ok;
        detail += fmt("%s%s=%.3f/%.2f", detail.empty() ? "" : " ", c.name, rep.fit.slope, spread);
    }
    m = "slope/spread: " + detail;
    return pass;
}

bool crit8_contraction(std::string& m) {
    bool pass = true;
    double worst_factor = 0, slope_lo = std::numeric_limits<double>::infinity(), slope_hi = 0;
    int worst_iters = 0;
    for (const auto& cf : certified_families()) {
        SolverConfig cfg;
        cfg.K = 16;
        cfg.dt = 1e-3;
        cfg.snapshot_stride = 1 << 30;
        SweepResult sweep = period_sweep(cf.fc.fam, cf.set, 20, 1e-3, 4.0, 6.0, 13, cfg, 1);
        for (const auto& row : sweep.rows) {
            pass = pass && !row.solver_failed && row.factor < 1.0;
            worst_factor = std::max(worst_factor, row.factor);
        }
        pass = pass && sweep.outliers == 0 && sweep.rows.size() == 20;

        // Roomiest sampled period: stay away from interval endpoints where the
        // inverse factor (and hence the contraction constant) degrades.
        double best_T = 0, best_gap = -1;
        for (double T : sample_periods(cf.set, 64, 17)) {
            double gap = nearest_exclusion_gap(cf.set, T);
            if (gap > best_gap) {
                best_gap = gap;
                best_T = T;
            }
        }
        ContractionScan scan = contraction_scan(cf.fc.fam, best_T, cf.set, 4.0,
                                                {1e-2, 3e-3, 1e-3, 3e-4, 1e-4}, 6.0, 7, cfg);
        slope_lo = std::min(slope_lo, scan.fit.slope);
        slope_hi = std::max(slope_hi, scan.fit.slope);
        pass = pass && std::abs(scan.fit.slope - 1.0) <= kContractionSlopeTol;

        FourierField u0 = random_field(16, 1e-3, 6.0, 7);
        IterateResult it = iterate_K(u0, cf.fc.fam, best_T, cf.set, 4.0, kIterateCap, kIterateTol, cfg);
        pass = pass && it.converged && !it.diverged && it.iterations <= kIterateCap &&
               it.norms.back() < kIterateTol;
        worst_iters = std::max(worst_iters, it.iterations);
    }
    m = fmt("80 periods contract (max factor %.3f), slope=[%.3f,%.3f], fixed point <=%d iters",
            worst_factor, slope_lo, slope_hi, worst_iters);
    return pass;
}

bool crit9_homogeneity(std::string& m) {
    EquationFamily fam = EquationFamily::fifth();
    const double s = 4.0, t = 0.3;
    std::vector<double> amps = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
    std::vector<double> la, lb, lr;
    for (double a : amps) {
        FourierField v = random_field(32, a, 8.0, 7);
        la.push_back(std::log(a));
        lb.push_back(std::log(sobolev_norm(compute_B(v, t, fam), s + 3.0)));
        lr.push_back(std::log(sobolev_norm(compute_R(v, t, fam), s + 2.0)));
    }
    LineFit fb = fit_line(la, lb);
    LineFit fr = fit_line(la, lr);
    m = fmt("B slope=%.6f (H^7), R slope=%.6f (H^6)", fb.slope, fr.slope);
    return std::abs(fb.slope - 2.0) <= kHomogeneityTol && std::abs(fr.slope - 3.0) <= kHomogeneityTol;
}

bool crit10_determinism(std::string& m) {
    fs::path dir = fs::temp_directory_path() / "dispersive_acceptance_rerun";
    std::error_code ec;
    fs::remove_all(dir, ec);
    std::string out = dir.string();
    std::vector<std::vector<std::string>> runs = {
        {"identities", "--kmax", "60"},
        {"divisor", "--symbol", "kdv(0)", "--kmax", "16", "--count", "8", "--seed", "5"},
        {"simulate", "--family", "kdv", "--K", "8", "--T", "0.25", "--dt", "1e-3"},
        {"duhamel", "--family", "kdv", "--K", "8", "--dt", "1e-3", "--T", "0.5"},
        {"smoothing", "--family", "kdv", "--K", "8", "--s", "4", "--p", "2", "--ptilde", "2"},
        {"contract", "--family", "kdv", "--sweep", "--count", "5", "--K", "8", "--kmax", "32"},
    };
    auto run_all = [&]() -> bool {
        // The subcommands narrate to stdout; park it on /dev/null so the
        // acceptance log keeps one line per criterion.
        std::fflush(stdout);
        int saved = dup(1);
        int devnull = open("/dev/null", O_WRONLY);
        dup2(devnull, 1);
        bool ok = true;
        for (auto args : runs) {
            args.insert(args.end(), {"--out", out, "--no-timestamp"});
            if (cli::run(args) != 0) {
                ok = false;
                break;
            }
        }
        std::fflush(stdout);
        dup2(saved, 1);
        close(saved);
        close(devnull);
        return ok;
    };
    auto snapshot = [&]() {
        std::map<std::string, std::string> bytes;
        for (const auto& entry : fs::recursive_directory_iterator(dir))
            if (entry.is_regular_file()) bytes[entry.path().string()] = slurp(entry.path());
        return bytes;
    };
    if (!run_all()) {
        m = "first pass: a subcommand exited nonzero";
        return false;
    }
    auto first = snapshot();
    if (!run_all()) {
        m = "second pass: a subcommand exited nonzero";
        return false;
    }
    auto second = snapshot();
    std::size_t mismatches = 0;
    if (first.size() != second.size()) ++mismatches;
    for (const auto& [path, data] : first) {
        auto it = second.find(path);
        if (it == second.end() || it->second != data) ++mismatches;
    }
    fs::remove_all(dir, ec);
    m = fmt("%zu payload files (CSV+JSON) byte-compared across reruns, %zu mismatches",
            first.size(), mismatches);
    return !first.empty() && mismatches == 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    struct Criterion {
        int num;
        const char* label;
        bool (*body)(std::string&);
    };
    std::vector<Criterion> criteria = {
        {1, "phase identities exact for r = 3, 5, 7 up to |k|, |j| = 500", crit1_identities},
        {2, "denominator suprema within their closed-form caps at range 500", crit2_denominators},
        {3, "excluded sets: measure, constants, 100 certified periods per family", crit3_excluded_sets},
        {4, "inverse factor round trip is the identity on random fields", crit4_round_trip},
        {5, "solver: linear flow, 4th-order convergence, mean and L2 conservation", crit5_solver},
        {6, "normal-form route matches the direct smoothing term in H^4", crit6_route_equivalence},
        {7, "smoothing-norm amplitude scaling: quadratic exponents, bounded ratios", crit7_smoothing},
        {8, "contraction at certified periods; linear factor law; fixed point", crit8_contraction},
        {9, "quadratic/cubic homogeneity of the boundary and remainder terms", crit9_homogeneity},
        {10, "byte-identical CSV/JSON payloads across reruns", crit10_determinism},
    };

    int failures = 0, ran = 0;
    auto t0 = steady::now();
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.num)) continue;
        ++ran;
        std::string metrics;
        bool pass = false;
        try {
            pass = c.body(metrics);
        } catch (const std::exception& e) {
            metrics = fmt("exception: %s", e.what());
        }
        if (!pass) ++failures;
        std::printf("[%s] %2d. %s — %s\n", pass ? "PASS" : "FAIL", c.num, c.label, metrics.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/%d criteria passed in %.0fs\n", ran - failures, ran,
                secs_since(t0));
    return failures == 0 ? 0 : 1;
}
