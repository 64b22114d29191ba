// smolctl: run, audit and certify truncated coagulation systems from a JSON config.
//
// Exit codes: 0 success, 1 check failed (smallness verdict, verify-example,
// audit violations), 2 configuration or usage error, 3 integrator failure,
// 4 equilibrium failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "smol/config.hpp"
#include "smol/smol.hpp"

namespace fs = std::filesystem;
using smol::json;

namespace {

enum Exit : int { ok = 0, check_failed = 1, usage = 2, integrator_failed = 3, equilibrium_failed = 4 };

struct Options {
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::string format;
    std::string grid_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> mu;
    std::optional<double> rel_tol;
    std::optional<double> abs_tol;
    std::string trajectory_path;
};

struct RunResult {
    int code = Exit::ok;
    json summary = json::object();
    std::string log;
};

json models_json(const smol::RunConfig& cfg)
{
    json j;
    j["N"] = *cfg.N;
    j["kernel"] = cfg.kernel->name();
    j["removal"] = cfg.removal->name();
    j["source"] = cfg.source->name();
    const auto& env = cfg.kernel->envelope();
    j["envelope"] = {{"A_star", env.A_star}, {"alpha", env.alpha}, {"beta", env.beta}};
    j["R_star"] = cfg.removal->R_star();
    j["gamma"] = cfg.removal->gamma();
    return j;
}

void write_file(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw smol::Error("cannot write " + path.string());
    }
    out << text;
}

std::vector<smol::MomentReport> audit(const smol::RunConfig& cfg, const smol::Trajectory& traj, double m1_in)
{
    auto reports = smol::audit_trajectory(traj, cfg.mu_list, cfg.constants(), m1_in);
    if (!cfg.assumptions_ok()) {
        for (auto& r : reports) {
            for (auto& e : r.entries) {
                e = smol::MomentEntry{e.mu, e.value, std::nullopt, std::nullopt, std::nullopt, true, true, true};
            }
        }
    }
    return reports;
}

json audit_summary(const std::vector<smol::MomentReport>& reports, const smol::RunConfig& cfg)
{
    std::size_t checked = 0, violations = 0;
    json failing = json::array();
    for (const auto& r : reports) {
        for (const auto& e : r.entries) {
            checked += e.bound_total_mass.has_value() + e.bound_general.has_value() + e.bound_large_time.has_value();
            if (!e.ok()) {
                ++violations;
                if (failing.size() < 20) {
                    failing.push_back({{"t", r.t}, {"mu", e.mu}, {"value", e.value}});
                }
            }
        }
    }
    json j;
    j["bounds_checked"] = checked;
    j["violations"] = violations;
    j["all_ok"] = violations == 0;
    j["bounds_suppressed"] = !cfg.assumptions_ok();
    j["first_violations"] = failing;
    return j;
}

RunResult cmd_simulate(const smol::RunConfig& cfg, const fs::path& out)
{
    RunResult res;
    std::ostringstream log;
    const auto start = std::chrono::steady_clock::now();
    const auto sys = cfg.system();
    const auto init = cfg.initial_state();
    smol::Trajectory traj;
    try {
        traj = smol::integrate(sys, init, cfg.integrator);
    } catch (const smol::StiffnessError& e) {
        log << "integrator failure: " << e.what() << '\n';
        res.code = Exit::integrator_failed;
        res.summary = {{"error", e.what()}, {"t", e.t()}, {"component", e.component()}};
        res.log = log.str();
        return res;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double m1_in = smol::moment(init, 1.0);
    const auto reports = audit(cfg, traj, m1_in);

    std::ostringstream tcsv, mcsv;
    smol::io::write_trajectory(tcsv, traj, cfg.format);
    smol::io::write_moment_reports(mcsv, reports);
    write_file(out / "trajectory.csv", tcsv.str());
    write_file(out / "moments.csv", mcsv.str());

    json s = models_json(cfg);
    s["t_end"] = cfg.integrator.t_end;
    s["samples"] = traj.size();
    s["m1_initial"] = m1_in;
    s["m1_final"] = smol::moment(traj.back(), 1.0);
    s["steps"] = {{"accepted", traj.stats.accepted},
                  {"rejected", traj.stats.rejected},
                  {"negativity_rejections", traj.stats.negativity_rejections},
                  {"rhs_evaluations", traj.stats.rhs_evaluations}};
    s["bound_checks"] = audit_summary(reports, cfg);
    s["warnings"] = cfg.warnings;
    s["wall_time_s"] = wall;
    write_file(out / "summary.json", s.dump(2) + "\n");
    log << "simulated N=" << *cfg.N << " to t=" << cfg.integrator.t_end << " (" << traj.stats.accepted
        << " steps); bound violations: " << s["bound_checks"]["violations"].get<std::size_t>() << '\n';
    res.summary = s;
    res.log = log.str();
    return res;
}

double default_smallness_mu(const smol::RunConfig& cfg)
{
    const auto& env = cfg.kernel->envelope();
    const double need = std::max(2.0 - env.alpha - env.beta, 1.0) - env.beta;
    return need < 1.0 ? 1.0 : need + 0.5;
}

std::optional<smol::SmallnessCertificate> try_certificate(const smol::RunConfig& cfg, double mu)
{
    if (!cfg.assumptions_ok()) {
        return std::nullopt;
    }
    const auto in = smol::smallness_inputs(cfg.constants(), mu);
    if (!smol::smallness_hypothesis_failure(in).empty()) {
        return std::nullopt;
    }
    return smol::smallness_certificate(in);
}

RunResult cmd_equilibrium(const smol::RunConfig& cfg, const fs::path& out)
{
    RunResult res;
    std::ostringstream log;
    const auto sys = cfg.system();
    smol::EquilibriumResult eq;
    try {
        eq = smol::solve_equilibrium(sys, cfg.equilibrium);
    } catch (const smol::ConvergenceError& e) {
        log << "equilibrium failure: " << e.what() << "\nresidual history (last entries):";
        const auto& h = e.residual_history();
        for (std::size_t i = h.size() > 10 ? h.size() - 10 : 0; i < h.size(); ++i) {
            log << ' ' << h[i];
        }
        log << '\n';
        res.code = Exit::equilibrium_failed;
        res.summary = {{"error", e.what()}, {"residual_history", h}};
        res.log = log.str();
        return res;
    }
    std::ostringstream qcsv;
    smol::io::write_state(qcsv, eq.Q, "Q_k");
    write_file(out / "equilibrium.csv", qcsv.str());

    json s = models_json(cfg);
    s["residual"] = eq.residual;
    s["tol"] = cfg.equilibrium.tol;
    s["iterations"] = eq.iterations;
    s["method"] = smol::to_string(eq.method);
    s["warnings"] = cfg.warnings;
    write_file(out / "equilibrium.json", s.dump(2) + "\n");
    log << "equilibrium residual " << eq.residual << " after " << eq.iterations << " sweeps ("
        << smol::to_string(eq.method) << ")\n";

    const fs::path traj_path = out / "trajectory.csv";
    if (fs::exists(traj_path)) {
        std::ifstream in(traj_path);
        const auto traj = smol::io::read_trajectory(in);
        json c;
        const double mu = cfg.smallness_mu.value_or(1.0);
        try {
            auto rep = smol::convergence_analysis(traj, eq.Q, mu, 0.5);
            if (auto cert = try_certificate(cfg, mu); cert && cert->pass) {
                rep.theoretical_kappa = cert->kappa;
            }
            c["mu"] = mu;
            c["fitted_rate"] = rep.fitted_rate;
            c["r_squared"] = rep.r_squared;
            c["fit_rms"] = rep.fit_rms;
            c["points_used"] = rep.points_used;
            c["window"] = {rep.t_lo, rep.t_hi};
            c["theoretical_kappa"] = rep.theoretical_kappa ? json(*rep.theoretical_kappa) : json(nullptr);
            c["rate_at_least_kappa"] =
                rep.theoretical_kappa ? json(rep.fitted_rate >= *rep.theoretical_kappa) : json(nullptr);
        } catch (const smol::InsufficientDataError& e) {
            c["mu"] = mu;
            c["error"] = e.what();
        }
        write_file(out / "convergence.json", c.dump(2) + "\n");
        s["convergence"] = c;
    }
    res.summary = s;
    res.log = log.str();
    return res;
}

json certificate_json(const smol::SmallnessCertificate& c)
{
    json j;
    j["mu"] = c.inputs.mu;
    j["alpha"] = c.inputs.alpha;
    j["beta"] = c.inputs.beta;
    j["gamma"] = c.inputs.gamma;
    j["A_star"] = c.inputs.A_star;
    j["R_star"] = c.inputs.R_star;
    j["s1_hat"] = c.inputs.s1_hat;
    j["s_mu_plus_beta_hat"] = c.inputs.s_mub_hat;
    j["C_mu"] = c.C_mu;
    j["order"] = c.order;
    j["p"] = c.p;
    j["q"] = c.q;
    j["rho"] = c.rho;
    j["p_at_mu"] = c.p_at_mu;
    j["kappa1"] = c.kappa1;
    j["kappa2"] = c.kappa2;
    j["kappa"] = c.kappa;
    j["verdict"] = c.pass ? "pass" : "fail";
    j["notes"] = c.notes;
    return j;
}

RunResult cmd_check_smallness(const smol::RunConfig& cfg, std::optional<double> mu_flag)
{
    RunResult res;
    std::ostringstream log;
    cfg.require_model();
    const double mu = mu_flag ? *mu_flag : cfg.smallness_mu.value_or(default_smallness_mu(cfg));
    if (!(mu >= 1.0)) {
        log << "check-smallness: mu=" << mu << " must be >= 1\n";
        res.code = Exit::usage;
        res.log = log.str();
        return res;
    }
    if (!cfg.assumptions_ok()) {
        for (const auto& w : cfg.warnings) {
            log << "assumption violated: " << w << '\n';
        }
        res.code = Exit::usage;
        res.log = log.str();
        return res;
    }
    const auto in = smol::smallness_inputs(cfg.constants(), mu);
    if (auto why = smol::smallness_hypothesis_failure(in); !why.empty()) {
        log << "check-smallness: hypotheses violated: " << why << '\n';
        res.code = Exit::usage;
        res.log = log.str();
        return res;
    }
    const auto cert = smol::smallness_certificate(in);
    json j = certificate_json(cert);

    // monomer-only kernels with power-law removal admit the explicit comparison
    if (cfg.kernel->family() == smol::KernelFamily::constant_monomer &&
        cfg.removal->family() == smol::RateFamily::power_law) {
        smol::ExampleParams p;
        p.A_star = (*cfg.kernel)(1, 1);
        p.R_star = cfg.removal->R_star();
        p.gamma = cfg.removal->gamma();
        const auto top = cfg.source->support_max().value_or(*cfg.N);
        for (std::size_t k = 1; k <= std::min(top, *cfg.N); ++k) {
            p.s.push_back((*cfg.source)(k));
        }
        if (p.R_star > 0.0 && p.gamma > 0.0 && p.A_star * p.source(1) >= 4.0 * p.R_star * p.R_star) {
            const auto gap = smol::smallness_gap_demo(p, 1.0);
            j["gap_note"] = {{"contraction_bracket_lower", gap.bracket_lower},
                             {"contraction_bracket_lower_exact", gap.bracket_lower_exact},
                             {"explicit_decay_rate", gap.decay_rate},
                             {"text", "the contraction bracket stays positive along every pair of solutions, "
                                      "yet the explicit solution converges exponentially at explicit_decay_rate"}};
        }
    }
    log << j.dump(2) << '\n';
    res.code = cert.pass ? Exit::ok : Exit::check_failed;
    res.summary = j;
    res.log = log.str();
    return res;
}

RunResult cmd_verify_example(const smol::RunConfig& cfg, const Options& opt)
{
    RunResult res;
    std::ostringstream log;
    const smol::ExampleParams p = cfg.example.value_or(smol::ExampleParams::standard());
    smol::ExampleCheckOptions o;
    o.N = cfg.example_N;
    if (opt.rel_tol) {
        o.rel_tol = *opt.rel_tol;
    }
    if (opt.abs_tol) {
        o.abs_tol = *opt.abs_tol;
    }
    const auto checks = smol::verify_example(p, o);
    bool all = true;
    json arr = json::array();
    log << std::left << std::setw(34) << "check" << std::setw(6) << "ok" << std::setw(16) << "value"
        << std::setw(16) << "limit" << "detail\n";
    for (const auto& c : checks) {
        all = all && c.pass;
        log << std::setw(34) << c.name << std::setw(6) << (c.pass ? "PASS" : "FAIL") << std::setw(16)
            << std::setprecision(6) << c.value << std::setw(16) << c.threshold << c.detail << '\n';
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold},
                       {"detail", c.detail}});
    }
    if (!all) {
        log << "failing checks:";
        for (const auto& c : checks) {
            if (!c.pass) {
                log << " [" << c.name << "]";
            }
        }
        log << '\n';
    }
    res.code = all ? Exit::ok : Exit::check_failed;
    res.summary = {{"checks", arr}, {"all_pass", all}};
    res.log = log.str();
    return res;
}

RunResult cmd_audit(const smol::RunConfig& cfg, const fs::path& out, const Options& opt)
{
    RunResult res;
    std::ostringstream log;
    cfg.require_model();
    const fs::path tpath = opt.trajectory_path.empty() ? out / "trajectory.csv" : fs::path(opt.trajectory_path);
    std::ifstream in(tpath);
    if (!in) {
        throw smol::ConfigError("", "cannot open trajectory " + tpath.string());
    }
    const auto traj = smol::io::read_trajectory(in);
    if (traj.empty() || traj.samples.front().size() != *cfg.N) {
        throw smol::ConfigError("/N", "trajectory length does not match N");
    }
    const double m1_in =
        traj.samples.front().t == 0.0 ? smol::moment(traj.samples.front(), 1.0) : smol::moment(cfg.initial_state(), 1.0);
    const auto reports = audit(cfg, traj, m1_in);
    std::ostringstream mcsv;
    smol::io::write_moment_reports(mcsv, reports);
    write_file(out / "moments.csv", mcsv.str());
    json s = audit_summary(reports, cfg);
    s["warnings"] = cfg.warnings;
    log << "audited " << traj.size() << " samples: " << s["bounds_checked"].get<std::size_t>()
        << " bound checks, " << s["violations"].get<std::size_t>() << " violations\n";
    res.code = s["all_ok"].get<bool>() ? Exit::ok : Exit::check_failed;
    res.summary = s;
    res.log = log.str();
    return res;
}

RunResult run_one(const json& config_json, const fs::path& base_dir, const fs::path& out, const Options& opt)
{
    RunResult res;
    try {
        smol::RunConfig cfg = smol::parse_config(config_json, base_dir);
        if (opt.seed) {
            cfg.seed = *opt.seed;
        }
        if (opt.format == "wide") {
            cfg.format = smol::io::TrajectoryFormat::wide_format;
        } else if (opt.format == "long") {
            cfg.format = smol::io::TrajectoryFormat::long_format;
        }
        std::string warn;
        for (const auto& w : cfg.warnings) {
            warn += "warning: " + w + " (moment bounds and certificates suppressed)\n";
        }
        if (opt.command == "simulate") {
            res = cmd_simulate(cfg, out);
        } else if (opt.command == "equilibrium") {
            res = cmd_equilibrium(cfg, out);
        } else if (opt.command == "check-smallness") {
            res = cmd_check_smallness(cfg, opt.mu);
        } else if (opt.command == "verify-example") {
            res = cmd_verify_example(cfg, opt);
        } else {
            res = cmd_audit(cfg, out, opt);
        }
        res.log = warn + res.log;
    } catch (const smol::ConfigError& e) {
        res.code = Exit::usage;
        res.log = std::string("config error at ") + e.what() + '\n';
        res.summary = {{"error", e.what()}, {"pointer", e.pointer()}};
    } catch (const smol::Error& e) {
        res.code = Exit::usage;
        res.log = std::string("error: ") + e.what() + '\n';
        res.summary = {{"error", e.what()}};
    }
    return res;
}

int run(const Options& opt)
{
    json base = json::object({{"schema", smol::config_schema_version}});
    fs::path base_dir = fs::current_path();
    try {
        if (!opt.config_path.empty()) {
            base = smol::parse_json_text(smol::read_text_file(opt.config_path), opt.config_path);
            base_dir = fs::path(opt.config_path).parent_path();
        } else if (opt.command != "verify-example") {
            std::cerr << "error: --config is required for " << opt.command << '\n';
            return Exit::usage;
        }
    } catch (const smol::Error& e) {
        std::cerr << e.what() << '\n';
        return Exit::usage;
    }
    fs::path out = opt.out_dir.empty() ? fs::path("out") : fs::path(opt.out_dir);
    if (opt.out_dir.empty() && base.is_object() && base.contains("output") && base["output"].is_object() &&
        base["output"].contains("dir") && base["output"]["dir"].is_string()) {
        out = base_dir / base["output"]["dir"].get<std::string>();
    }

    if (opt.grid_path.empty()) {
        const RunResult r = run_one(base, base_dir, out, opt);
        (r.code == Exit::ok || r.code == Exit::check_failed ? std::cout : std::cerr) << r.log;
        return r.code;
    }

    json grid;
    try {
        grid = smol::parse_json_text(smol::read_text_file(opt.grid_path), opt.grid_path);
    } catch (const smol::Error& e) {
        std::cerr << e.what() << '\n';
        return Exit::usage;
    }
    if (!grid.is_array()) {
        std::cerr << opt.grid_path << ": expected a JSON array of config patches\n";
        return Exit::usage;
    }
    std::vector<RunResult> results(grid.size());
    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(grid.size(), std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < grid.size(); i = next++) {
                json cfg = base;
                cfg.merge_patch(grid[i]);
                results[i] = run_one(cfg, base_dir, out / ("grid_" + std::to_string(i)), opt);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    int code = Exit::ok;
    json merged = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        std::cout << "[" << i << "] exit " << results[i].code << '\n' << results[i].log;
        merged.push_back({{"index", i}, {"exit_code", results[i].code}, {"summary", results[i].summary}});
        code = std::max(code, results[i].code);
    }
    write_file(out / "grid_summary.json", merged.dump(2) + "\n");
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Simulate, audit and certify truncated coagulation systems with source and removal"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config_path, "run configuration (JSON)");
        if (needs_config) {
            c->required();
        }
        sub->add_option("--out", opt.out_dir, "output directory (default: output.dir from config, else ./out)");
        sub->add_option("--format", opt.format, "trajectory CSV layout")->check(CLI::IsMember({"long", "wide"}));
        sub->add_option("--grid", opt.grid_path, "JSON array of config patches, one run per entry");
        sub->add_option("--seed", opt.seed, "seed for random initial data (overrides config)");
    };

    auto* sim = app.add_subcommand("simulate", "integrate the truncated system and audit moment bounds");
    add_common(sim, true);
    auto* eq = app.add_subcommand("equilibrium", "solve the stationary truncated system");
    add_common(eq, true);
    auto* sm = app.add_subcommand("check-smallness", "evaluate the smallness certificate");
    add_common(sm, true);
    sm->add_option("--mu", opt.mu, "moment order of the weighted distance (>= 1)");
    auto* ve = app.add_subcommand("verify-example", "cross-check the solver against the closed-form model");
    add_common(ve, false);
    ve->add_option("--rel-tol", opt.rel_tol, "integrator relative tolerance");
    ve->add_option("--abs-tol", opt.abs_tol, "integrator absolute tolerance");
    auto* au = app.add_subcommand("audit", "evaluate moment bounds over an existing trajectory CSV");
    add_common(au, true);
    au->add_option("--trajectory", opt.trajectory_path, "trajectory CSV (default: <out>/trajectory.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : Exit::usage;
    }
    for (auto* sub : {sim, eq, sm, ve, au}) {
        if (sub->parsed()) {
            opt.command = sub->get_name();
        }
    }
    try {
        return run(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Exit::usage;
    }
}
