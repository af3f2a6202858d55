// Command-line front end: model constants, branch tables, chain and SDE
// simulation, Monte Carlo estimators and the experiment runners, with CSV,
// JSON and gnuplot-ready columnar outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cwhyst/chain.hpp"
#include "cwhyst/config.hpp"
#include "cwhyst/gauss_fixtures.hpp"
#include "cwhyst/harness.hpp"
#include "cwhyst/io.hpp"
#include "cwhyst/model.hpp"
#include "cwhyst/ode.hpp"
#include "cwhyst/sde.hpp"

using json = nlohmann::json;
using namespace cwhyst;

namespace {

struct CliOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    long long replicas = 0;
    std::string out_dir;
    std::string format;
    int threads = -1;
};

ExperimentConfig effective_config(const CliOptions& opt) {
    ExperimentConfig cfg;
    if (!opt.config_path.empty()) cfg = load_config(opt.config_path);
    if (opt.seed_set) cfg.seed = opt.seed;
    if (opt.replicas > 0) cfg.replicas = opt.replicas;
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (!opt.format.empty()) cfg.format = opt.format;
    if (opt.threads >= 0) cfg.threads = opt.threads;
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file " + path);
    out << content;
}

void emit(const ExperimentConfig& cfg, const std::string& name, const json& j) {
    write_text(cfg.out_dir + "/" + name + ".json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
}

json params_json(const ModelParams& p) {
    return json{{"beta", p.beta},
                {"m_c", p.m_c},
                {"h_c", p.h_c},
                {"mu", p.mu},
                {"nu", p.nu},
                {"xi", p.xi},
                {"sde_noise", p.sde_noise()},
                {"residual_stationarity", p.m_c - std::tanh(p.beta * (p.m_c - p.h_c))},
                {"residual_inflection", p.beta * (1.0 - p.m_c * p.m_c) - 1.0}};
}

json pestimate_json(const PEstimate& e) {
    return json{{"replicas", e.replicas},
                {"n_plus", e.n_plus},
                {"n_minus", e.n_minus},
                {"n_undecided", e.n_undecided},
                {"p_plus", e.p_plus},
                {"p_minus", e.p_minus},
                {"undecided_rate", e.undecided_rate},
                {"se_plus", e.se_plus},
                {"se_minus", e.se_minus}};
}

int cmd_params(const ExperimentConfig& cfg) {
    const ModelParams p = make_params(cfg.beta);
    json j = params_json(p);
    j["schema"] = "cwhyst.params.v1";
    j["config"] = cfg.hash_hex();
    emit(cfg, "params", j);
    return 0;
}

int cmd_branches(const ExperimentConfig& cfg, double h_single, bool h_given, int grid_n) {
    const ModelParams p = make_params(cfg.beta);
    if (h_given) {
        const BranchSet b = branches(p, h_single);
        json j{{"schema", "cwhyst.branches.v1"},
               {"config", cfg.hash_hex()},
               {"h", h_single},
               {"degenerate", b.degenerate}};
        if (b.m_minus) j["m_minus"] = *b.m_minus;
        if (b.m_zero) j["m_zero"] = *b.m_zero;
        if (b.m_plus) j["m_plus"] = *b.m_plus;
        emit(cfg, "branches", j);
        return 0;
    }
    std::ostringstream csv;
    csv << "h,m_minus,m_zero,m_plus,degenerate\n";
    csv.precision(17);
    for (int i = 0; i <= grid_n; ++i) {
        const double h = -1.2 * p.h_c + 2.4 * p.h_c * i / grid_n;
        const BranchSet b = branches(p, h);
        csv << h << ",";
        if (b.m_minus) csv << *b.m_minus;
        csv << ",";
        if (b.m_zero) csv << *b.m_zero;
        csv << ",";
        if (b.m_plus) csv << *b.m_plus;
        csv << "," << (b.degenerate ? 1 : 0) << "\n";
    }
    write_text(cfg.out_dir + "/branches.csv", csv.str());
    std::cout << "wrote " << cfg.out_dir << "/branches.csv (" << grid_n + 1 << " rows)\n";
    return 0;
}

int cmd_simulate_chain(const ExperimentConfig& cfg, long long N, double t0, double t1, double m0,
                       bool m0_given, int decimate, const std::string& journal, bool loop_data) {
    const ModelParams p = make_params(cfg.beta);
    if (N <= 0) N = cfg.N_list.front();
    const double nk = std::pow(static_cast<double>(N), cfg.kappa);
    const double pi_half = 1.5707963267948966;
    if (!std::isfinite(t0)) t0 = -pi_half * nk;
    if (!std::isfinite(t1)) t1 = pi_half * nk;
    auto field = [&](double t) { return oscillating_field_kappa(p, N, cfg.kappa, t); };

    rng::Stream stream(cfg.seed, 0);
    double m_start = m0;
    if (!m0_given) {
        const BranchSet b = branches(p, field(t0));
        const double ref = b.m_plus ? *b.m_plus : *b.m_minus;
        m_start = (2.0 * std::llround((ref + 1.0) * N / 2.0) - N) / static_cast<double>(N);
    }
    const ChainTrajectory traj =
        simulate(p, N, field, t0, t1, m_start, stream, cfg.proposal_budget, decimate);

    std::vector<double> ts, ms, hs;
    ts.reserve(traj.events.size() + 1);
    ts.push_back(traj.t_start);
    ms.push_back(traj.m_start());
    for (const JumpEvent& e : traj.events) {
        ts.push_back(e.t);
        ms.push_back((2.0 * e.k - N) / static_cast<double>(N));
    }
    io::write_columnar(cfg.out_dir + "/chain_path.dat", "cwhyst.path.v1", cfg.hash_hex(), cfg.seed,
                       {"t", "m"}, {ts, ms});
    if (loop_data) {
        hs.reserve(ts.size());
        for (double t : ts) hs.push_back(field(t));
        io::write_columnar(cfg.out_dir + "/chain_loop.dat", "cwhyst.loop.v1", cfg.hash_hex(),
                           cfg.seed, {"h", "m"}, {hs, ms});
    }
    if (!journal.empty()) io::write_journal(journal, traj, cfg.hash(), cfg.seed);

    json j{{"schema", "cwhyst.chain_run.v1"},
           {"config", cfg.hash_hex()},
           {"N", N},
           {"kappa", cfg.kappa},
           {"t_start", traj.t_start},
           {"t_end", traj.t_end},
           {"m_start", traj.m_start()},
           {"events", traj.total_events},
           {"proposals", traj.total_proposals},
           {"seed", cfg.seed}};
    emit(cfg, "chain_run", j);
    return 0;
}

int cmd_simulate_sde(const ExperimentConfig& cfg, double t0, double y0, double t1) {
    const ModelParams p = make_params(cfg.beta);
    SdeConfig sc = sde_config(p, cfg.T);
    sc.epsilon_start = cfg.epsilon_start;
    sc.epsilon_boundary = cfg.epsilon_boundary;
    sc.epsilon_class = cfg.epsilon_class;
    sc.dt_max = cfg.dt_max;
    if (!std::isfinite(t0)) t0 = -cfg.T;
    if (!std::isfinite(t1)) t1 = cfg.T;
    if (!std::isfinite(y0)) y0 = cfg.T;
    const SdePath path = integrate_sde(sc, t0, y0, t1, rng::Stream(cfg.seed, 0));
    io::write_columnar(cfg.out_dir + "/sde_path.dat", "cwhyst.path.v1", cfg.hash_hex(), cfg.seed,
                       {"t", "Y"}, {path.t, path.y});
    json j{{"schema", "cwhyst.sde_run.v1"},
           {"config", cfg.hash_hex()},
           {"seed", cfg.seed},
           {"xi", sc.xi},
           {"exploded", path.exploded}};
    if (path.Pi) j["Pi"] = *path.Pi;
    if (t0 <= -cfg.T && t1 >= cfg.T) {
        const Outcome o = classify(path, sc);
        j["outcome"] = to_string(o.tag);
        if (o.exit_time) j["exit_time"] = *o.exit_time;
        if (o.exit_value) j["exit_value"] = *o.exit_value;
    }
    emit(cfg, "sde_run", j);
    return 0;
}

int cmd_estimate_p(const ExperimentConfig& cfg) {
    const ModelParams p = make_params(cfg.beta);
    SdeConfig sc = sde_config(p, cfg.T);
    sc.epsilon_start = cfg.epsilon_start;
    sc.epsilon_boundary = cfg.epsilon_boundary;
    sc.epsilon_class = cfg.epsilon_class;
    sc.dt_max = cfg.dt_max;
    const PEstimate e = estimate_p_parallel(sc, cfg.replicas, cfg.seed, cfg.threads);
    json j = pestimate_json(e);
    j["schema"] = "cwhyst.estimate_p.v1";
    j["config"] = cfg.hash_hex();
    j["seed"] = cfg.seed;
    j["T"] = cfg.T;
    j["xi"] = sc.xi;
    j["epsilon_boundary"] = sc.epsilon_boundary;
    emit(cfg, "estimate_p", j);
    return 0;
}

int cmd_sweep_kappa(const ExperimentConfig& cfg) {
    const KappaSweepReport rep = run_kappa_sweep(cfg);
    std::ostringstream csv;
    csv << "N,kappa,replicas,jumps,jump_fraction,std_error\n";
    csv.precision(17);
    json cells = json::array();
    for (const KappaCell& c : rep.cells) {
        csv << c.N << "," << c.kappa << "," << c.replicas << "," << c.jumps << ","
            << c.jump_fraction << "," << c.std_error << "\n";
        cells.push_back(json{{"N", c.N},
                             {"kappa", c.kappa},
                             {"replicas", c.replicas},
                             {"jumps", c.jumps},
                             {"jump_fraction", c.jump_fraction},
                             {"std_error", c.std_error}});
    }
    write_text(cfg.out_dir + "/kappa_sweep.csv", csv.str());
    json j{{"schema", "cwhyst.kappa_sweep.v1"},
           {"config", cfg.hash_hex()},
           {"seed", cfg.seed},
           {"cells", cells}};
    emit(cfg, "kappa_sweep", j);
    return 0;
}

int cmd_main_theorem(const ExperimentConfig& cfg) {
    const MainTheoremReport rep = run_main_theorem(cfg);
    // per-replica records, one JSON object per line
    {
        std::ostringstream lines;
        lines.precision(17);
        for (const MainTheoremPerN& r : rep.per_n) {
            for (const RunRecord& rec : r.records) {
                json jr{{"config", io::hex64(rec.config_hash)},
                        {"N", r.N},
                        {"replica", rec.replica},
                        {"stream", rec.stream},
                        {"level", rec.level},
                        {"outcome", to_string(rec.outcome)},
                        {"h_plus", rec.h_plus},
                        {"h_minus", rec.h_minus}};
                if (std::isfinite(rec.exit_time)) jr["exit_time"] = rec.exit_time;
                if (std::isfinite(rec.exit_value)) jr["exit_value"] = rec.exit_value;
                lines << jr.dump() << "\n";
            }
        }
        write_text(cfg.out_dir + "/main_theorem_records.jsonl", lines.str());
    }
    json per_n = json::array();
    for (const MainTheoremPerN& r : rep.per_n) {
        per_n.push_back(json{{"N", r.N},
                             {"replicas", r.replicas},
                             {"freq_track_before", r.freq_track_before},
                             {"freq_h_plus_after", r.freq_h_plus_after},
                             {"freq_h_minus_after", r.freq_h_minus_after},
                             {"h_after_sum", r.h_after_sum},
                             {"chain_window", pestimate_json(r.chain_window)},
                             {"mean_events_per_replica", r.mean_events_per_replica}});
    }
    json j{{"schema", "cwhyst.main_theorem.v1"},
           {"config", cfg.hash_hex()},
           {"seed", cfg.seed},
           {"per_n", per_n},
           {"sde", pestimate_json(rep.sde)},
           {"agreement_z", rep.agreement_z}};
    emit(cfg, "main_theorem", j);
    return 0;
}

int cmd_full_loop(const ExperimentConfig& cfg) {
    const FullLoopReport rep = run_full_loop(cfg);
    json j{{"schema", "cwhyst.full_loop.v1"},
           {"config", cfg.hash_hex()},
           {"seed", cfg.seed},
           {"N", rep.N},
           {"periods", rep.periods},
           {"replicas", rep.replicas},
           {"jump_fraction_per_criticality", rep.jump_fraction_per_criticality},
           {"lag1_correlation", rep.lag1_correlation},
           {"down_jump_fraction", rep.down_jump_fraction},
           {"up_jump_fraction", rep.up_jump_fraction},
           {"symmetry_z", rep.symmetry_z},
           {"both_outcomes_seen", rep.both_outcomes_seen}};
    emit(cfg, "full_loop", j);
    return 0;
}

int cmd_stable_region(const ExperimentConfig& cfg) {
    const StableRegionReport rep = run_stable_region(cfg);
    json per_n = json::array();
    for (const StableRegionPerN& r : rep.per_n) {
        per_n.push_back(json{{"N", r.N},
                             {"replicas", r.replicas},
                             {"freq_track_gamma_prime", r.freq_track_gamma_prime},
                             {"freq_track_gamma", r.freq_track_gamma},
                             {"horizons", r.horizons},
                             {"exceedance", r.exceedance},
                             {"envelope_c", r.envelope_c},
                             {"conditioned", r.conditioned},
                             {"escape_conditioned", r.escape_conditioned},
                             {"escape_success_rate", r.escape_success_rate}});
    }
    json j{{"schema", "cwhyst.stable_region.v1"},
           {"config", cfg.hash_hex()},
           {"seed", cfg.seed},
           {"exceedance_epsilon", rep.exceedance_epsilon},
           {"per_n", per_n}};
    emit(cfg, "stable_region", j);
    return 0;
}

int cmd_gauss_check(const ExperimentConfig& cfg) {
    const long long R = std::max<long long>(cfg.replicas, 20000);
    const auto fixtures = gauss::run_ms_fixtures(R, cfg.seed);
    json fx = json::array();
    bool all_asserted_pass = true;
    for (const auto& f : fixtures) {
        fx.push_back(json{{"name", f.name},
                          {"asserted", f.asserted},
                          {"empirical", f.report.empirical},
                          {"std_error", f.report.std_error},
                          {"bound", f.report.bound},
                          {"pass", f.report.pass}});
        if (f.asserted && !f.report.pass) all_asserted_pass = false;
    }
    auto a1 = [](double) { return 1.0; };
    // the smallest ball needs enough replicas to see survivors at all
    const long long R_sb = std::max<long long>(R, 150000);
    const gauss::SmallDeviationReport sd =
        gauss::small_deviation_rate(a1, 0.0, 1.0, {0.5, 0.45, 0.4}, R_sb, cfg.seed + 101, 2000);
    json j{{"schema", "cwhyst.gauss_check.v1"},
           {"config", cfg.hash_hex()},
           {"seed", cfg.seed},
           {"marcus_shepp", fx},
           {"marcus_shepp_asserted_pass", all_asserted_pass},
           {"small_deviation",
            json{{"epsilons", sd.epsilons},
                 {"probabilities", sd.probabilities},
                 {"fitted_constant", sd.fitted_constant},
                 {"printed_constant", sd.analytic_constant},
                 {"markov_clock_constant", sd.markov_clock_constant},
                 {"relative_deviation_printed", sd.relative_deviation},
                 {"relative_deviation_markov", sd.markov_relative_deviation}}}};
    emit(cfg, "gauss_check", j);
    return 0;
}

int cmd_ode(const ExperimentConfig& cfg, const std::string& task, double t0, double y0,
            double t_end, long long N, double m0, double omega) {
    const ModelParams p = make_params(cfg.beta);
    if (task == "riccati") {
        const OdeSolution s = solve_riccati(t0, y0, t_end, 1e-10);
        io::write_columnar(cfg.out_dir + "/riccati.dat", "cwhyst.ode.v1", cfg.hash_hex(), cfg.seed,
                           {"t", "y"}, {s.t, s.y});
        json j{{"schema", "cwhyst.ode.v1"}, {"task", task}, {"config", cfg.hash_hex()}};
        if (s.blowup_time) j["blowup_time"] = *s.blowup_time;
        emit(cfg, "ode_riccati", j);
    } else if (task == "critical-curve") {
        const CriticalCurve c = critical_curve(t_end > 0 ? t_end : 10.0, 1e-10);
        io::write_columnar(cfg.out_dir + "/critical_curve.dat", "cwhyst.ode.v1", cfg.hash_hex(),
                           cfg.seed, {"t", "y_star"}, {c.t, c.y});
        json j{{"schema", "cwhyst.critical_curve.v1"},
               {"config", cfg.hash_hex()},
               {"y_star0", c.y_star0()},
               {"bracket_lo", c.y0_lo},
               {"bracket_hi", c.y0_hi},
               {"tol", c.tol}};
        emit(cfg, "ode_critical_curve", j);
    } else if (task == "tracking") {
        const OdeSolution s = tracking_solution(12.0, t_end > 0 ? t_end : 10.0, 1e-10);
        io::write_columnar(cfg.out_dir + "/tracking.dat", "cwhyst.ode.v1", cfg.hash_hex(), cfg.seed,
                           {"t", "y_plus"}, {s.t, s.y});
        json j{{"schema", "cwhyst.tracking.v1"},
               {"config", cfg.hash_hex()},
               {"y_plus0", s.eval(0.0)}};
        emit(cfg, "ode_tracking", j);
    } else if (task == "flow") {
        if (N <= 0) N = cfg.N_list.front();
        const OdeSolution s = macroscopic_flow(p, N, t0, m0, t_end, 1e-10);
        io::write_columnar(cfg.out_dir + "/flow.dat", "cwhyst.ode.v1", cfg.hash_hex(), cfg.seed,
                           {"t", "m"}, {s.t, s.y});
        json j{{"schema", "cwhyst.flow.v1"}, {"config", cfg.hash_hex()}, {"N", N}};
        emit(cfg, "ode_flow", j);
    } else if (task == "adiabatic" || task == "figures") {
        // figure data: equilibrium branches, free-energy profiles, adiabatic
        // tracking under the oscillating field
        {
            std::vector<double> hs, mm, mz, mp;
            for (int i = 0; i <= 400; ++i) {
                const double h = -1.1 * p.h_c + 2.2 * p.h_c * i / 400;
                const BranchSet b = branches(p, h);
                hs.push_back(h);
                mm.push_back(b.m_minus ? *b.m_minus : std::nan(""));
                mz.push_back(b.m_zero ? *b.m_zero : std::nan(""));
                mp.push_back(b.m_plus ? *b.m_plus : std::nan(""));
            }
            io::write_columnar(cfg.out_dir + "/fig_branches.dat", "cwhyst.fig.v1", cfg.hash_hex(),
                               cfg.seed, {"h", "m_minus", "m_zero", "m_plus"}, {hs, mm, mz, mp});
        }
        {
            std::vector<std::vector<double>> cols(6);
            std::vector<std::string> names = {"m",          "phi_h0",         "phi_half",
                                              "phi_hc",     "phi_minus_half", "phi_minus_hc"};
            const double fields[5] = {0.0, 0.5 * p.h_c, p.h_c, -0.5 * p.h_c, -p.h_c};
            for (int i = 1; i < 400; ++i) {
                const double m = -1.0 + 2.0 * i / 400;
                cols[0].push_back(m);
                for (int f = 0; f < 5; ++f) cols[1 + f].push_back(free_energy(p, fields[f], m));
            }
            io::write_columnar(cfg.out_dir + "/fig_free_energy.dat", "cwhyst.fig.v1",
                               cfg.hash_hex(), cfg.seed, names, cols);
        }
        {
            const double w = omega > 0 ? omega : 1e-3;
            auto h = [&](double t) { return -p.h_c * std::cos(w * t); };
            const OdeSolution s =
                flow_ode(p, h, 0.0, p.m_c, 2.0 * 3.14159265358979323846 / w, 1e-10);
            std::vector<double> tau, mbar, mplus;
            for (int i = 0; i <= 2000; ++i) {
                const double t = s.t_back() * i / 2000;
                tau.push_back(w * t);
                mbar.push_back(s.eval(t));
                const BranchSet b = branches(p, h(t));
                mplus.push_back(b.m_plus ? *b.m_plus : std::nan(""));
            }
            io::write_columnar(cfg.out_dir + "/fig_adiabatic.dat", "cwhyst.fig.v1", cfg.hash_hex(),
                               cfg.seed, {"tau", "m_bar", "m_plus"}, {tau, mbar, mplus});
        }
        json j{{"schema", "cwhyst.figures.v1"},
               {"config", cfg.hash_hex()},
               {"files", {"fig_branches.dat", "fig_free_energy.dat", "fig_adiabatic.dat"}}};
        emit(cfg, "ode_figures", j);
    } else {
        throw ConfigError("ode: unknown task '" + task + "'");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cwhyst: random hysteresis in the critically driven mean-field magnet"};
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions opt;
    app.add_option("--config", opt.config_path, "experiment config file (key = value tree)");
    auto* seed_opt = app.add_option("--seed", opt.seed, "master seed (overrides config)");
    app.add_option("--replicas", opt.replicas, "replica count (overrides config)");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--format", opt.format, "output format: csv or json");
    app.add_option("--threads", opt.threads, "worker threads (0 = hardware)");

    auto* c_params = app.add_subcommand("params", "model constants for beta");
    double beta_override = 0.0;
    c_params->add_option("--beta", beta_override, "inverse temperature");

    auto* c_branches = app.add_subcommand("branches", "equilibrium branches");
    double h_single = 0.0;
    int grid_n = 240;
    c_branches->add_option("--beta", beta_override, "inverse temperature");
    auto* h_opt = c_branches->add_option("--field", h_single, "single field value");
    c_branches->add_option("--grid", grid_n, "rows in the branch table");

    auto* c_chain = app.add_subcommand("simulate-chain", "one exact chain trajectory");
    long long N_opt = 0;
    double t0 = std::nan(""), t1 = std::nan(""), m0 = std::nan("");
    int decimate = 1;
    std::string journal;
    bool loop_data = false;
    double kappa_override = 0.0;
    c_chain->add_option("--N", N_opt, "system size");
    c_chain->add_option("--kappa", kappa_override, "frequency exponent");
    c_chain->add_option("--t0", t0, "start time (microscopic)");
    c_chain->add_option("--t1", t1, "end time (microscopic)");
    auto* m0_opt = c_chain->add_option("--m0", m0, "initial magnetization (lattice value)");
    c_chain->add_option("--decimate", decimate, "keep every D-th event");
    c_chain->add_option("--journal", journal, "write the binary event journal here");
    c_chain->add_flag("--loop-data", loop_data, "also write (h, m) loop data");

    auto* c_sde = app.add_subcommand("simulate-sde", "one limit-SDE path");
    double sde_t0 = std::nan(""), sde_y0 = std::nan(""), sde_t1 = std::nan("");
    c_sde->add_option("--t0", sde_t0, "start time");
    c_sde->add_option("--y0", sde_y0, "start value");
    c_sde->add_option("--t1", sde_t1, "end time");
    double T_override = 0.0;
    c_sde->add_option("--T", T_override, "window half-width");

    auto* c_estp = app.add_subcommand("estimate-p", "Monte Carlo estimate of p+-");
    c_estp->add_option("--T", T_override, "window half-width");

    auto* c_sweep = app.add_subcommand("sweep-kappa", "jump fraction over the kappa grid");
    auto* c_main = app.add_subcommand("main-theorem", "two-level p+- comparison");
    auto* c_loop = app.add_subcommand("full-loop", "iterated semi-periods");
    auto* c_stab = app.add_subcommand("stable-region", "tracking, handoff and escape statistics");
    auto* c_gauss = app.add_subcommand("gauss-check", "Gaussian toolkit fixtures");

    auto* c_ode = app.add_subcommand("ode", "deterministic solutions and figure data");
    std::string ode_task = "figures";
    double ode_t0 = 0.0, ode_y0 = 0.0, ode_tend = 10.0, ode_m0 = 0.5, ode_omega = 0.0;
    long long ode_N = 0;
    c_ode->add_option("--task", ode_task,
                      "riccati | critical-curve | tracking | flow | adiabatic | figures");
    c_ode->add_option("--t0", ode_t0, "start time");
    c_ode->add_option("--y0", ode_y0, "start value");
    c_ode->add_option("--t-end", ode_tend, "end time");
    c_ode->add_option("--N", ode_N, "system size for the flow");
    c_ode->add_option("--m0", ode_m0, "start magnetization for the flow");
    c_ode->add_option("--omega", ode_omega, "adiabatic frequency");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    opt.seed_set = seed_opt->count() > 0;

    try {
        ExperimentConfig cfg = effective_config(opt);
        if (beta_override > 0.0) cfg.beta = beta_override;
        if (kappa_override > 0.0) cfg.kappa = kappa_override;
        if (T_override > 0.0) cfg.T = T_override;
        cfg.validate();

        if (*c_params) return cmd_params(cfg);
        if (*c_branches) return cmd_branches(cfg, h_single, h_opt->count() > 0, grid_n);
        if (*c_chain)
            return cmd_simulate_chain(cfg, N_opt, t0, t1, m0, m0_opt->count() > 0, decimate,
                                      journal, loop_data);
        if (*c_sde) return cmd_simulate_sde(cfg, sde_t0, sde_y0, sde_t1);
        if (*c_estp) return cmd_estimate_p(cfg);
        if (*c_sweep) return cmd_sweep_kappa(cfg);
        if (*c_main) return cmd_main_theorem(cfg);
        if (*c_loop) return cmd_full_loop(cfg);
        if (*c_stab) return cmd_stable_region(cfg);
        if (*c_gauss) return cmd_gauss_check(cfg);
        if (*c_ode)
            return cmd_ode(cfg, ode_task, ode_t0, ode_y0, ode_tend, ode_N, ode_m0, ode_omega);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ResourceError& e) {
        std::cerr << "resource budget exceeded: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const StatisticalError& e) {
        std::cerr << "statistical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
