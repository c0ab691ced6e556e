#pragma once
// Command-line front door: reproducible experiments over the library with
// machine-readable outputs. CSV tables carry a header row; JSON reports embed
// their full resolved configuration (plus a timestamp unless --no-timestamp,
// so reruns with identical config and seeds are byte-identical).
//
// Subcommands: identities, divisor, simulate, duhamel, smoothing, contract.
// Exit codes: 0 = pass, 1 = property failure, 2 = usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dispersive/common.hpp"
#include "dispersive/duhamel.hpp"
#include "dispersive/evolution.hpp"
#include "dispersive/field.hpp"
#include "dispersive/fixedpoint.hpp"
#include "dispersive/smalldivisor.hpp"
#include "dispersive/symbols.hpp"

namespace dispersive {
namespace cli {

/** The run completed but a checked property did not hold (exit 1), as
 *  opposed to malformed input or configuration (exit 2). */
struct property_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }

    std::string str() const {
        std::string out;
        auto join = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        join(header);
        for (const auto& r : rows) join(r);
        return out;
    }
};

inline void write_text(const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + p.string());
    out << body;
}

inline std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// ---------------------------------------------------------------------------
// Options shared by every subcommand.

struct CommonOpts {
    std::string out_dir = ".";
    int threads = 1;
    bool no_timestamp = false;
    std::string config_file;
};

inline void add_common(CLI::App* sub, CommonOpts& c) {
    if (const char* env = std::getenv("DISPERSIVE_OUT")) c.out_dir = env;
    sub->add_option("--out", c.out_dir, "Output directory ($DISPERSIVE_OUT overrides the default)")
        ->capture_default_str();
    sub->add_option("--threads", c.threads, "Worker-thread cap for sweeps")
        ->check(CLI::Range(1, 256))
        ->capture_default_str();
    sub->add_flag("--no-timestamp", c.no_timestamp,
                  "Omit the timestamp field so reruns are byte-identical");
    sub->add_option("--config", c.config_file,
                    "Flat key=value config file; flags take precedence");
}

/** Apply a flat key=value config file to options the command line left at
 *  their defaults (precedence: flags > file > defaults). Keys are long option
 *  names without the leading dashes; '#' starts a comment; unknown keys are
 *  rejected. Values run through the same validators as flags. */
inline void apply_config_file(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file: " + path);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        " is not key=value: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
            val = val.substr(1, val.size() - 2);
        if (key.empty() || key == "config")
            throw std::invalid_argument("bad config key on line " + std::to_string(lineno));
        CLI::Option* op = sub->get_option_no_throw("--" + key);
        if (op == nullptr)
            throw std::invalid_argument("unknown config key: " + key);
        if (op->count() > 0) continue;  // the flag was given explicitly; it wins
        op->add_result(val);
        op->run_callback();
    }
}

inline std::filesystem::path out_file(const CommonOpts& c, const std::string& name) {
    std::filesystem::path dir(c.out_dir);
    std::filesystem::create_directories(dir);
    return dir / name;
}

inline void emit_report(const CommonOpts& c, const std::string& name, nlohmann::json report) {
    if (!c.no_timestamp) report["timestamp"] = utc_timestamp();
    write_text(out_file(c, name), report.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Family / symbol resolution.

struct FamilyOpts {
    std::string family = "fifth";
    double theta = 0.5;  // kawahara third-order coefficient
    double alpha = 0.0;  // first-order shift
    double omega = 0.0;  // fifth-order frequency parameter
};

inline void add_family(CLI::App* sub, FamilyOpts& f) {
    sub->add_option("--family", f.family, "Equation family")
        ->check(CLI::IsMember({"fifth", "kawahara", "seventh", "kdv"}))
        ->capture_default_str();
    sub->add_option("--theta", f.theta, "Kawahara third-order coefficient (must be > 0)")
        ->capture_default_str();
    sub->add_option("--alpha", f.alpha, "First-order coefficient shift")->capture_default_str();
    sub->add_option("--omega", f.omega, "Fifth-order frequency parameter")->capture_default_str();
}

inline nlohmann::json family_json(const EquationFamily& fam) {
    return {{"family", fam.name()},
            {"nu", fam.nu},
            {"theta", fam.theta},
            {"alpha", fam.alpha},
            {"omega", fam.omega}};
}

/** Family witness via the coefficient-box scan; failure to certify is an
 *  experiment outcome, not a usage error. */
inline HypothesesWitness certified_witness(const SymbolFamilyBox& box, int k_scan) {
    auto res = check_hypotheses(box, k_scan);
    if (res.status != HypothesesResult::Status::witness)
        throw property_failure("symbol hypotheses not certified: " + res.detail);
    return res.witness;
}

inline HypothesesWitness family_witness(const EquationFamily& fam, int k_scan) {
    SymbolFamilyBox box = [&] {
        try {
            return hypotheses_box(fam);
        } catch (const std::exception& e) {
            throw property_failure(std::string("symbol hypotheses not certified: ") + e.what());
        }
    }();
    return certified_witness(box, k_scan);
}

struct ResolvedSymbol {
    LinearSymbol A;
    HypothesesWitness w;
    nlohmann::json echo;
};

/** --symbol accepts a named preset — fifth(omega), kawahara(theta[, alpha]),
 *  seventh([alpha]), kdv([alpha]) — or a JSON list of [alpha, r] pairs, which
 *  is certified against the degenerate (zero-width) coefficient box. */
inline ResolvedSymbol resolve_symbol(const std::string& spec, int k_scan) {
    std::string s = spec;
    s.erase(0, s.find_first_not_of(" \t"));
    if (!s.empty()) s.erase(s.find_last_not_of(" \t") + 1);
    if (s.empty()) throw std::invalid_argument("--symbol must not be empty");

    if (s.front() == '[') {
        nlohmann::json j = nlohmann::json::parse(s, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_array())
            throw std::invalid_argument("--symbol list must be JSON like [[1,5],[-0.5,1]]");
        std::vector<SymbolTerm> terms;
        std::vector<int> orders;
        std::vector<CoeffInterval> boxes;
        for (const auto& row : j) {
            if (!row.is_array() || row.size() != 2)
                throw std::invalid_argument("--symbol entries are [alpha, r] pairs");
            double a = row[0].get<double>();
            int r = row[1].get<int>();
            terms.push_back({a, r});
            orders.push_back(r);
            boxes.emplace_back(a, a);
        }
        LinearSymbol A{terms};  // validates the order ladder
        return {A, certified_witness(SymbolFamilyBox{orders, boxes}, k_scan), {{"symbol", s}}};
    }

    std::string name = s;
    std::vector<double> args;
    auto lp = s.find('(');
    if (lp != std::string::npos) {
        if (s.back() != ')') throw std::invalid_argument("--symbol preset needs closing ')'");
        name = s.substr(0, lp);
        std::stringstream ss(s.substr(lp + 1, s.size() - lp - 2));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.find_first_not_of(" \t") == std::string::npos) continue;
            std::size_t pos = 0;
            double v = std::stod(tok, &pos);
            if (tok.find_first_not_of(" \t", pos) != std::string::npos)
                throw std::invalid_argument("bad --symbol preset argument: " + tok);
            args.push_back(v);
        }
    }
    double theta = 0.5, alpha = 0.0, omega = 0.0;
    std::size_t max_args = 1;
    if (name == "fifth") {
        if (!args.empty()) omega = args[0];
    } else if (name == "kawahara") {
        max_args = 2;
        if (args.empty()) throw std::invalid_argument("kawahara(theta[, alpha]) needs theta");
        theta = args[0];
        if (args.size() > 1) alpha = args[1];
    } else if (name == "seventh" || name == "kdv") {
        if (!args.empty()) alpha = args[0];
    } else {
        throw std::invalid_argument("unknown --symbol preset: " + name);
    }
    if (args.size() > max_args)
        throw std::invalid_argument("too many arguments in --symbol preset: " + s);
    EquationFamily fam = family_by_name(name, theta, alpha, omega);
    return {fam.symbol(), family_witness(fam, k_scan), family_json(fam)};
}

inline nlohmann::json denominator_json(const DenominatorScan& d) {
    return {{"k_range", d.k_range},
            {"kawahara_theta", d.kawahara_theta},
            {"positivity_ok", d.positivity_ok},
            {"max_sigma_gain", d.max_sigma_gain},
            {"max_b_denominator", d.max_b_denominator},
            {"max_tau_gain", d.max_tau_gain},
            {"max_kawahara_gain", d.max_kawahara_gain},
            {"max_kdv_gain", d.max_kdv_gain},
            {"kawahara_resonances_skipped", d.kawahara_resonances_skipped},
            {"pass", d.pass}};
}

inline nlohmann::json finite_or_null(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json();
}

inline std::vector<double> parse_ladder(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.find_first_not_of(" \t") == std::string::npos)
            throw std::invalid_argument("empty entry in amplitude ladder: " + s);
        std::size_t pos = 0;
        out.push_back(std::stod(tok, &pos));
        if (tok.find_first_not_of(" \t", pos) != std::string::npos)
            throw std::invalid_argument("bad amplitude ladder entry: " + tok);
    }
    if (out.size() < 2)
        throw std::invalid_argument("amplitude ladder needs >= 2 comma-separated entries");
    return out;
}

// ---------------------------------------------------------------------------
// Subcommand option bundles.

struct IdentitiesOpts {
    CommonOpts c;
    int kmax = 500;
    double theta = 0.5;
};

struct DivisorOpts {
    CommonOpts c;
    std::string symbol = "fifth(0)";
    double t1 = 1.0, t2 = 2.0, p = 1.5, delta = 0.1;
    int kmax = 128;
    int count = 100;
    std::uint64_t seed = 7;
    int interval_cap = 200;
};

struct SimulateOpts {
    CommonOpts c;
    FamilyOpts f;
    int K = 64;
    double dt = 1e-3, T = 1.0, amplitude = 1e-2, decay = 8.0;
    std::uint64_t seed = 7;
    long long stride = 0;  // 0: pick ~8 snapshots
};

struct DuhamelOpts {
    CommonOpts c;
    FamilyOpts f;
    int K = 16;
    double dt = 1e-4, T = 0.5, amplitude = 1e-2, decay = 8.0, s = 4.0, tol = 1e-6;
    std::uint64_t seed = 7;
};

struct SmoothingOpts {
    CommonOpts c;
    FamilyOpts f;
    int K = 32;
    double dt = 1e-3, T = 1.0, decay = 8.0;
    double s = 6.0, p = 2.0, ptilde = 0.0, q = 1.0;
    std::string ladder = "1e-2,5e-3,2.5e-3,1.25e-3";
    std::uint64_t seed = 7;
    std::optional<double> expect_exponent;
    double exponent_tol = 0.1;
};

struct ContractOpts {
    CommonOpts c;
    FamilyOpts f;
    int K = 16;
    double dt = 1e-3, s = 4.0, decay = 6.0;
    double t1 = 1.0, t2 = 2.0, p = 1.5, delta = 0.1;
    int kmax = 64;
    std::optional<double> t;
    bool sweep = false;
    int count = 20;
    double amplitude = 1e-3;
    std::string ladder = "1e-2,3e-3,1e-3,3e-4,1e-4";
    std::uint64_t seed = 7;
};

// ---------------------------------------------------------------------------
// Subcommand bodies.

inline int cmd_identities(const IdentitiesOpts& o) {
    IdentityScan scan = scan_phase_identities(o.kmax);
    DenominatorScan pos = denominator_bounds(o.kmax, o.theta);
    DenominatorScan neg = denominator_bounds(o.kmax, -o.theta);
    bool pass = scan.ok && pos.pass && neg.pass;

    nlohmann::json rep = {
        {"config", {{"kmax", o.kmax}, {"theta", o.theta}, {"out", o.c.out_dir}, {"threads", o.c.threads}}},
        {"identities",
         {{"ok", scan.ok},
          {"pairs_checked", scan.pairs_checked},
          {"bad_r", scan.bad_r},
          {"bad_k", scan.bad_k},
          {"bad_j", scan.bad_j}}},
        {"denominators",
         {{"positive_theta", denominator_json(pos)}, {"negative_theta", denominator_json(neg)}}},
        {"pass", pass}};
    emit_report(o.c, "identities.json", std::move(rep));
    std::cout << "identities: " << (pass ? "PASS" : "FAIL") << " (pairs=" << scan.pairs_checked
              << ")\n";
    return pass ? 0 : 1;
}

inline int cmd_divisor(const DivisorOpts& o) {
    ResolvedSymbol rs = resolve_symbol(o.symbol, std::max(o.kmax, 64));
    ExcludedSet S = build_excluded_set(rs.A, rs.w, o.t1, o.t2, o.p, o.delta, o.kmax);
    std::vector<double> periods = sample_periods(S, o.count, o.seed);

    CsvTable csv;
    csv.header = {"T", "exclusion_gap", "certify_max_ratio", "certify_argmax_k"};
    int failures = 0;
    double max_ratio = 0.0;
    for (double T : periods) {
        CertifyReport r = certify_bound(rs.A, S, T, o.kmax);
        if (!r.pass) ++failures;
        max_ratio = std::max(max_ratio, r.max_ratio);
        csv.add_row({fmt17(T), fmt17(nearest_exclusion_gap(S, T)), fmt17(r.max_ratio),
                     std::to_string(r.argmax_k)});
    }
    bool pass = failures == 0;

    nlohmann::json rep = to_json(S, static_cast<std::size_t>(o.interval_cap));
    rep["config"] = {{"symbol", o.symbol}, {"t1", o.t1},   {"t2", o.t2},
                     {"p", o.p},           {"delta", o.delta}, {"kmax", o.kmax},
                     {"count", o.count},   {"seed", o.seed},   {"interval_cap", o.interval_cap},
                     {"out", o.c.out_dir}, {"threads", o.c.threads}};
    rep["symbol"] = rs.echo;
    rep["certify"] = {{"samples", static_cast<int>(periods.size())},
                      {"failures", failures},
                      {"max_ratio", max_ratio}};
    rep["pass"] = pass;
    emit_report(o.c, "divisor.json", std::move(rep));
    write_text(out_file(o.c, "divisor_periods.csv"), csv.str());
    std::cout << "divisor: " << (pass ? "PASS" : "FAIL") << " (c0=" << fmt17(S.c0)
              << ", removed=" << fmt17(S.removed_measure)
              << ", tail=" << fmt17(S.uncertified_tail) << ")\n";
    return pass ? 0 : 1;
}

inline int cmd_simulate(const SimulateOpts& o) {
    EquationFamily fam = family_by_name(o.f.family, o.f.theta, o.f.alpha, o.f.omega);
    SolverConfig cfg;
    cfg.K = o.K;
    cfg.dt = o.dt;
    long long est_steps = static_cast<long long>(std::ceil(o.T / o.dt - 1e-12));
    cfg.snapshot_stride = static_cast<int>(o.stride > 0 ? o.stride : std::max<long long>(1, est_steps / 8));

    FourierField u0 = random_field(o.K, o.amplitude, o.decay, o.seed);
    Trajectory traj = solve(u0, fam, o.T, cfg);
    auto diag = conserved_diagnostics(traj);
    DoublingCheck doubling = doubling_time_check(traj);

    CsvTable csv;
    csv.header = {"t", "step", "mean", "l2", "h6"};
    for (std::size_t i = 0; i < diag.size(); ++i)
        csv.add_row({fmt17(diag[i].t), std::to_string(traj.steps[i]), fmt17(diag[i].mean),
                     fmt17(diag[i].l2), fmt17(diag[i].h6)});
    write_text(out_file(o.c, "simulate_diagnostics.csv"), csv.str());

    for (std::size_t i = 0; i < traj.v.size(); ++i) {
        char name[48];
        std::snprintf(name, sizeof name, "simulate_snapshot_%04zu.json", i);
        write_text(out_file(o.c, name), to_json(traj.u_at(i)).dump(2) + "\n");
    }

    double l2_drift = diag.empty() || diag.front().l2 == 0.0
                          ? 0.0
                          : std::abs(diag.back().l2 - diag.front().l2) / diag.front().l2;
    bool pass = doubling.pass;
    nlohmann::json rep = {
        {"config",
         {{"K", o.K}, {"dt", o.dt}, {"T", o.T}, {"amplitude", o.amplitude}, {"decay", o.decay},
          {"seed", o.seed}, {"stride", cfg.snapshot_stride}, {"out", o.c.out_dir},
          {"threads", o.c.threads}}},
        {"equation", family_json(fam)},
        {"snapshots", static_cast<int>(traj.v.size())},
        {"steps", traj.steps.back()},
        {"l2_drift", l2_drift},
        {"doubling_pass", doubling.pass},
        {"pass", pass}};
    emit_report(o.c, "simulate.json", std::move(rep));
    std::cout << "simulate: " << (pass ? "PASS" : "FAIL") << " (" << traj.v.size()
              << " snapshots, l2 drift " << fmt17(l2_drift) << ")\n";
    return pass ? 0 : 1;
}

inline int cmd_duhamel(const DuhamelOpts& o) {
    EquationFamily fam = family_by_name(o.f.family, o.f.theta, o.f.alpha, o.f.omega);
    SolverConfig cfg;
    cfg.K = o.K;
    cfg.dt = o.dt;
    FourierField u0 = random_field(o.K, o.amplitude, o.decay, o.seed);

    FourierField direct = duhamel_direct(u0, fam, o.T, cfg);
    NormalFormResult nf = duhamel_normalform(u0, fam, o.T, cfg);
    double denom = sobolev_norm(direct, o.s);
    double rel = denom > 0.0 ? sobolev_norm(nf.sd - direct, o.s) / denom
                             : sobolev_norm(nf.sd, o.s);
    bool pass = rel <= o.tol;

    nlohmann::json rep = {
        {"config",
         {{"K", o.K}, {"dt", o.dt}, {"T", o.T}, {"amplitude", o.amplitude}, {"decay", o.decay},
          {"s", o.s}, {"tol", o.tol}, {"seed", o.seed}, {"out", o.c.out_dir},
          {"threads", o.c.threads}}},
        {"equation", family_json(fam)},
        {"norm_direct", denom},
        {"norm_normalform", sobolev_norm(nf.sd, o.s)},
        {"relative_difference", rel},
        {"normalform",
         {{"resonant_pairs", nf.resonant_pairs},
          {"steps", nf.steps},
          {"quad_refine_rel", nf.quad_refine_rel},
          {"boundary_start_norm", sobolev_norm(nf.b_start, o.s)},
          {"boundary_end_norm", sobolev_norm(nf.b_end, o.s)},
          {"integral_norm", sobolev_norm(nf.integral, o.s)}}},
        {"pass", pass}};
    emit_report(o.c, "duhamel.json", std::move(rep));
    std::cout << "duhamel: " << (pass ? "PASS" : "FAIL") << " (relative difference "
              << fmt17(rel) << ")\n";
    return pass ? 0 : 1;
}

inline int cmd_smoothing(const SmoothingOpts& o) {
    EquationFamily fam = family_by_name(o.f.family, o.f.theta, o.f.alpha, o.f.omega);
    SolverConfig cfg;
    cfg.K = o.K;
    cfg.dt = o.dt;
    SmoothingParams params;
    params.s = o.s;
    params.p = o.p;
    params.ptilde = o.ptilde;
    params.q = o.q;
    params.T = o.T;
    params.decay = o.decay;
    params.seed = o.seed;
    params.amplitudes = parse_ladder(o.ladder);

    SmoothingReport rep = smoothing_report(fam, cfg, params);

    CsvTable csv;
    csv.header = {"amplitude", "norm_s", "norm_s_ptilde", "norm_sd", "ratio"};
    bool rows_ok = !rep.rows.empty();
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows) {
        csv.add_row({fmt17(r.amplitude), fmt17(r.norm_s), fmt17(r.norm_s_ptilde),
                     fmt17(r.norm_sd), fmt17(r.ratio)});
        rows.push_back({{"amplitude", r.amplitude},
                        {"norm_s", r.norm_s},
                        {"norm_s_ptilde", r.norm_s_ptilde},
                        {"norm_sd", r.norm_sd},
                        {"ratio", r.ratio}});
        if (!(std::isfinite(r.norm_sd) && r.norm_sd > 0.0 && std::isfinite(r.ratio)))
            rows_ok = false;
    }
    bool pass = rows_ok;
    if (o.expect_exponent)
        pass = pass && std::abs(rep.fit.slope - *o.expect_exponent) <= o.exponent_tol;

    nlohmann::json jrep = {
        {"config",
         {{"K", o.K}, {"dt", o.dt}, {"T", o.T}, {"decay", o.decay}, {"s", o.s}, {"p", o.p},
          {"ptilde", o.ptilde}, {"q", o.q}, {"ladder", o.ladder}, {"seed", o.seed},
          {"expect_exponent", o.expect_exponent ? nlohmann::json(*o.expect_exponent)
                                                : nlohmann::json()},
          {"exponent_tol", o.exponent_tol}, {"out", o.c.out_dir}, {"threads", o.c.threads}}},
        {"equation", family_json(fam)},
        {"rows", std::move(rows)},
        {"fit",
         {{"slope", rep.fit.slope},
          {"intercept", rep.fit.intercept},
          {"slope_stderr", rep.fit.slope_stderr},
          {"r2", rep.fit.r2}}},
        {"eta", rep.eta},
        {"pass", pass}};
    emit_report(o.c, "smoothing.json", std::move(jrep));
    write_text(out_file(o.c, "smoothing.csv"), csv.str());
    std::cout << "smoothing: " << (pass ? "PASS" : "FAIL") << " (exponent "
              << fmt17(rep.fit.slope) << ")\n";
    return pass ? 0 : 1;
}

inline int cmd_contract(const ContractOpts& o) {
    if (o.t.has_value() == o.sweep)
        throw std::invalid_argument("pass exactly one of --t or --sweep");
    EquationFamily fam = family_by_name(o.f.family, o.f.theta, o.f.alpha, o.f.omega);
    HypothesesWitness w = family_witness(fam, std::max(o.kmax, 64));
    ExcludedSet S = build_excluded_set(fam.symbol(), w, o.t1, o.t2, o.p, o.delta, o.kmax);
    SolverConfig cfg;
    cfg.K = o.K;
    cfg.dt = o.dt;

    nlohmann::json config = {
        {"K", o.K},        {"dt", o.dt},       {"s", o.s},         {"decay", o.decay},
        {"t1", o.t1},      {"t2", o.t2},       {"p", o.p},         {"delta", o.delta},
        {"kmax", o.kmax},  {"count", o.count}, {"amplitude", o.amplitude},
        {"ladder", o.ladder}, {"seed", o.seed}, {"sweep", o.sweep},
        {"t", o.t ? nlohmann::json(*o.t) : nlohmann::json()},
        {"out", o.c.out_dir}, {"threads", o.c.threads}};

    if (o.t) {
        PeriodClass cls = classify_period(S, *o.t);
        if (cls.verdict != PeriodVerdict::certified)
            throw std::invalid_argument(
                cls.verdict == PeriodVerdict::excluded
                    ? "--t lies in an excluded interval (mode k = " + std::to_string(cls.k) + ")"
                    : "--t lies outside the certified window [t1, t2]");
        ContractionScan scan = contraction_scan(fam, *o.t, S, o.s, parse_ladder(o.ladder),
                                                o.decay, o.seed, cfg);
        CsvTable csv;
        csv.header = {"amplitude", "norm_in", "norm_out", "factor", "solver_failed"};
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : scan.rows) {
            csv.add_row({fmt17(r.amplitude), fmt17(r.norm_in), fmt17(r.norm_out),
                         fmt17(r.factor), r.solver_failed ? "1" : "0"});
            rows.push_back({{"amplitude", r.amplitude},
                            {"norm_in", r.norm_in},
                            {"norm_out", r.norm_out},
                            {"factor", finite_or_null(r.factor)},
                            {"solver_failed", r.solver_failed}});
        }
        // Pass gate: the smallest original rung must contract (larger rungs
        // may legitimately sit above the threshold being bracketed).
        std::size_t ladder_len = parse_ladder(o.ladder).size();
        const ContractionRow& last = scan.rows.at(ladder_len - 1);
        bool pass = !last.solver_failed && last.factor < 1.0;

        nlohmann::json rep = {
            {"config", config},
            {"equation", family_json(fam)},
            {"mode", "scan"},
            {"rows", std::move(rows)},
            {"fit",
             {{"slope", scan.fit.slope},
              {"intercept", scan.fit.intercept},
              {"slope_stderr", scan.fit.slope_stderr},
              {"r2", scan.fit.r2}}},
            {"r0_low", finite_or_null(scan.r0_low)},
            {"r0_high", finite_or_null(scan.r0_high)},
            {"bisection_steps", scan.bisection_steps},
            {"pass", pass}};
        emit_report(o.c, "contract.json", std::move(rep));
        write_text(out_file(o.c, "contract.csv"), csv.str());
        std::cout << "contract: " << (pass ? "PASS" : "FAIL") << " (slope "
                  << fmt17(scan.fit.slope) << ")\n";
        return pass ? 0 : 1;
    }

    SweepResult sweep = period_sweep(fam, S, o.count, o.amplitude, o.s, o.decay, o.seed, cfg,
                                     o.c.threads);
    CsvTable csv;
    csv.header = {"T", "factor", "exclusion_gap", "solver_failed"};
    double max_factor = 0.0, min_factor = std::numeric_limits<double>::infinity();
    for (const auto& r : sweep.rows) {
        csv.add_row({fmt17(r.T), fmt17(r.factor), fmt17(r.exclusion_gap),
                     r.solver_failed ? "1" : "0"});
        if (!r.solver_failed) {
            max_factor = std::max(max_factor, r.factor);
            min_factor = std::min(min_factor, r.factor);
        }
    }
    bool pass = sweep.outliers == 0;
    nlohmann::json rep = {{"config", config},
                          {"equation", family_json(fam)},
                          {"mode", "sweep"},
                          {"count", static_cast<int>(sweep.rows.size())},
                          {"outliers", sweep.outliers},
                          {"max_factor", finite_or_null(max_factor)},
                          {"min_factor", finite_or_null(min_factor)},
                          {"pass", pass}};
    emit_report(o.c, "contract.json", std::move(rep));
    write_text(out_file(o.c, "contract.csv"), csv.str());
    std::cout << "contract: " << (pass ? "PASS" : "FAIL") << " (" << sweep.rows.size()
              << " periods, outliers " << sweep.outliers << ")\n";
    return pass ? 0 : 1;
}

}  // namespace detail

/** Parse and dispatch. `args` excludes the program name. Returns the process
 *  exit code: 0 pass, 1 property failure, 2 usage error. */
inline int run(const std::vector<std::string>& args) {
    CLI::App app{
        "dispersive: desk-scale experiments on small-divisor period sets, normal-form "
        "smoothing, and period-map contraction for periodic dispersive equations"};
    app.require_subcommand(1);

    detail::IdentitiesOpts id;
    auto* sub_id = app.add_subcommand(
        "identities", "Exact phase identities and uniform denominator bounds");
    sub_id->add_option("--kmax", id.kmax, "Scan range for |k|, |j|")
        ->check(CLI::Range(2, 2000))
        ->capture_default_str();
    sub_id->add_option("--theta", id.theta, "Kawahara coefficient for the denominator scan")
        ->capture_default_str();
    detail::add_common(sub_id, id.c);

    detail::DivisorOpts dv;
    auto* sub_dv = app.add_subcommand(
        "divisor", "Excluded period set: constants, intervals, sampled certified periods");
    sub_dv->add_option("--symbol", dv.symbol,
                       "Preset fifth(omega)|kawahara(theta[,alpha])|seventh([alpha])|kdv([alpha])"
                       " or JSON [[alpha,r],...]")
        ->capture_default_str();
    sub_dv->add_option("--t1", dv.t1, "Window start")->capture_default_str();
    sub_dv->add_option("--t2", dv.t2, "Window end")->capture_default_str();
    sub_dv->add_option("--p", dv.p, "Divisor exponent (> 1)")->capture_default_str();
    sub_dv->add_option("--delta", dv.delta, "Removed-measure budget")->capture_default_str();
    sub_dv->add_option("--kmax", dv.kmax, "Certified mode range")
        ->check(CLI::Range(1, 100000))
        ->capture_default_str();
    sub_dv->add_option("--count", dv.count, "Certified periods to sample")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    sub_dv->add_option("--seed", dv.seed, "Sampling seed")->capture_default_str();
    sub_dv->add_option("--interval-cap", dv.interval_cap, "Max intervals listed in JSON")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    detail::add_common(sub_dv, dv.c);

    detail::SimulateOpts sm;
    auto* sub_sm = app.add_subcommand(
        "simulate", "Evolve random initial data; snapshots plus conservation diagnostics");
    detail::add_family(sub_sm, sm.f);
    sub_sm->add_option("--K", sm.K, "Mode truncation")->check(CLI::Range(1, 512))
        ->capture_default_str();
    sub_sm->add_option("--dt", sm.dt, "Time step")->capture_default_str();
    sub_sm->add_option("--T", sm.T, "Horizon")->capture_default_str();
    sub_sm->add_option("--amplitude", sm.amplitude, "Initial-data amplitude")
        ->capture_default_str();
    sub_sm->add_option("--decay", sm.decay, "Initial-data spectral decay exponent")
        ->capture_default_str();
    sub_sm->add_option("--seed", sm.seed, "Initial-data seed")->capture_default_str();
    sub_sm->add_option("--stride", sm.stride, "Snapshot stride in steps (0 = ~8 snapshots)")
        ->capture_default_str();
    detail::add_common(sub_sm, sm.c);

    detail::DuhamelOpts dh;
    auto* sub_dh = app.add_subcommand(
        "duhamel", "Compare the direct and normal-form routes to the smoothing term");
    detail::add_family(sub_dh, dh.f);
    sub_dh->add_option("--K", dh.K, "Mode truncation")->check(CLI::Range(1, 512))
        ->capture_default_str();
    sub_dh->add_option("--dt", dh.dt, "Time step")->capture_default_str();
    sub_dh->add_option("--T", dh.T, "Horizon / candidate period")->capture_default_str();
    sub_dh->add_option("--amplitude", dh.amplitude, "Initial-data amplitude")
        ->capture_default_str();
    sub_dh->add_option("--decay", dh.decay, "Initial-data spectral decay exponent")
        ->capture_default_str();
    sub_dh->add_option("--s", dh.s, "Comparison Sobolev index")->capture_default_str();
    sub_dh->add_option("--tol", dh.tol, "Relative-difference gate")->capture_default_str();
    sub_dh->add_option("--seed", dh.seed, "Initial-data seed")->capture_default_str();
    detail::add_common(sub_dh, dh.c);

    detail::SmoothingOpts sg;
    auto* sub_sg = app.add_subcommand(
        "smoothing", "Amplitude-ladder scaling of the smoothing term");
    detail::add_family(sub_sg, sg.f);
    sub_sg->add_option("--ladder", sg.ladder, "Comma-separated decreasing amplitudes")
        ->capture_default_str();
    sub_sg->add_option("--s", sg.s, "Base Sobolev index")->capture_default_str();
    sub_sg->add_option("--p", sg.p, "Smoothing gain (target index s + p)")
        ->capture_default_str();
    sub_sg->add_option("--ptilde", sg.ptilde, "Auxiliary norm index offset")
        ->capture_default_str();
    sub_sg->add_option("--q", sg.q, "Auxiliary norm power in the ratio")->capture_default_str();
    sub_sg->add_option("--T", sg.T, "Horizon")->capture_default_str();
    sub_sg->add_option("--decay", sg.decay, "Shape spectral decay exponent")
        ->capture_default_str();
    sub_sg->add_option("--K", sg.K, "Mode truncation")->check(CLI::Range(1, 512))
        ->capture_default_str();
    sub_sg->add_option("--dt", sg.dt, "Time step")->capture_default_str();
    sub_sg->add_option("--seed", sg.seed, "Shape seed")->capture_default_str();
    sub_sg->add_option("--expect-exponent", sg.expect_exponent,
                       "Gate: fitted exponent must match this value");
    sub_sg->add_option("--exponent-tol", sg.exponent_tol, "Tolerance for --expect-exponent")
        ->capture_default_str();
    detail::add_common(sub_sg, sg.c);

    detail::ContractOpts ct;
    auto* sub_ct = app.add_subcommand(
        "contract", "Period-map contraction: amplitude scan at --t or period sweep");
    detail::add_family(sub_ct, ct.f);
    sub_ct->add_option("--t", ct.t, "Certified period for the amplitude scan");
    sub_ct->add_flag("--sweep", ct.sweep, "Sweep sampled certified periods instead");
    sub_ct->add_option("--count", ct.count, "Periods sampled in sweep mode")
        ->check(CLI::Range(1, 100000))
        ->capture_default_str();
    sub_ct->add_option("--amplitude", ct.amplitude, "Sweep-mode amplitude")
        ->capture_default_str();
    sub_ct->add_option("--amplitude-ladder", ct.ladder, "Scan-mode decreasing amplitudes")
        ->capture_default_str();
    sub_ct->add_option("--s", ct.s, "Contraction Sobolev index")->capture_default_str();
    sub_ct->add_option("--decay", ct.decay, "Shape spectral decay exponent")
        ->capture_default_str();
    sub_ct->add_option("--K", ct.K, "Mode truncation")->check(CLI::Range(1, 512))
        ->capture_default_str();
    sub_ct->add_option("--dt", ct.dt, "Time step")->capture_default_str();
    sub_ct->add_option("--t1", ct.t1, "Window start")->capture_default_str();
    sub_ct->add_option("--t2", ct.t2, "Window end")->capture_default_str();
    sub_ct->add_option("--p", ct.p, "Divisor exponent (> 1)")->capture_default_str();
    sub_ct->add_option("--delta", ct.delta, "Removed-measure budget")->capture_default_str();
    sub_ct->add_option("--kmax", ct.kmax, "Certified mode range (>= K)")
        ->check(CLI::Range(1, 100000))
        ->capture_default_str();
    sub_ct->add_option("--seed", ct.seed, "Shape / sampling seed")->capture_default_str();
    detail::add_common(sub_ct, ct.c);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("dispersive");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help or the parse error
        return code == 0 ? 0 : 2;
    }

    try {
        auto configure = [](CLI::App* sub, detail::CommonOpts& c) {
            if (!c.config_file.empty()) detail::apply_config_file(sub, c.config_file);
        };
        if (sub_id->parsed()) return configure(sub_id, id.c), detail::cmd_identities(id);
        if (sub_dv->parsed()) return configure(sub_dv, dv.c), detail::cmd_divisor(dv);
        if (sub_sm->parsed()) return configure(sub_sm, sm.c), detail::cmd_simulate(sm);
        if (sub_dh->parsed()) return configure(sub_dh, dh.c), detail::cmd_duhamel(dh);
        if (sub_sg->parsed()) return configure(sub_sg, sg.c), detail::cmd_smoothing(sg);
        if (sub_ct->parsed()) return configure(sub_ct, ct.c), detail::cmd_contract(ct);
    } catch (const property_failure& e) {
        std::cerr << "property failure: " << e.what() << "\n";
        return 1;
    } catch (const solver_error& e) {
        std::cerr << "solver abort at t = " << e.t << ": " << e.what() << "\n";
        return 1;
    } catch (const resonance_error& e) {
        std::cerr << "resonance: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;  // unreachable with require_subcommand(1)
}

}  // namespace cli
}  // namespace dispersive
