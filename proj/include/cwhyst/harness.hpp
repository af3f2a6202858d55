#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cwhyst/chain.hpp"
#include "cwhyst/config.hpp"
#include "cwhyst/errors.hpp"
#include "cwhyst/model.hpp"
#include "cwhyst/ode.hpp"
#include "cwhyst/outcome.hpp"
#include "cwhyst/sde.hpp"

namespace cwhyst {

// Experiment orchestration: kappa sweep, two-level p+- comparison, full-loop
// iteration and stable-region/handoff/escape statistics. Replicas are
// embarrassingly parallel; each worker owns its RNG stream and writes into a
// replica-indexed slot, so results are independent of the thread count.

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const char* env = std::getenv("CWHYST_THREADS");
    if (env) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

template <class Fn>
void parallel_for(long long n, int threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n < 2) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long long> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const long long i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// Distinct stream domains per experiment protocol, so different runners never
// share random numbers even under one master seed.
inline std::uint64_t stream_id(std::uint64_t salt, long long replica) {
    return (salt << 40) + static_cast<std::uint64_t>(replica);
}

struct RunRecord {
    std::uint64_t config_hash = 0;
    long long replica = -1;
    std::uint64_t stream = 0;
    std::string level;  // "chain" or "sde"
    OutcomeTag outcome = OutcomeTag::Undecided;
    double exit_time = std::numeric_limits<double>::quiet_NaN();
    double exit_value = std::numeric_limits<double>::quiet_NaN();
    bool h_plus = false;
    bool h_minus = false;
    double wall_ms = 0.0;  // metadata only; excluded from determinism digests
};

// ---------------------------------------------------------------------------
// Streaming chain protocols
// ---------------------------------------------------------------------------

// Uniform start on the lattice points admissible for the branch value m_ref:
// |m - m_ref| <= N^{-1/2+gamma}, per the stated initial-condition window.
inline long long sample_start_index(const ModelParams& /*p*/, long long N, double m_ref,
                                    double gamma_, rng::Stream& stream) {
    const double band = std::pow(static_cast<double>(N), -0.5 + gamma_);
    const long long k_ref = std::llround((m_ref + 1.0) * static_cast<double>(N) / 2.0);
    const long long half = std::max<long long>(0, static_cast<long long>(std::floor(band * N / 2.0)));
    const long long lo = std::max<long long>(0, k_ref - half);
    const long long hi = std::min<long long>(N, k_ref + half);
    const long long span = hi - lo + 1;
    long long offset = static_cast<long long>(stream.uniform() * static_cast<double>(span));
    if (offset >= span) offset = span - 1;
    return lo + offset;
}

// Classification of one chain replica over the critical window
// [-mu T N^{1/3}, mu T N^{1/3}], with optional continuation to mu' T N^{1/3}
// for the escape check. Start: on the upper branch at the window edge with a
// uniform N^{-1/2+gamma} jitter.
struct CriticalReplicaResult {
    Outcome outcome;
    bool escape_checked = false;
    bool escape_ok = false;
    double escape_dev = std::numeric_limits<double>::quiet_NaN();
    double y_entry_dev = 0.0;  // |Y_N(-T) - T| at the window entry
    std::uint64_t events = 0;
    std::uint64_t proposals = 0;
};

inline CriticalReplicaResult chain_critical_replica(const ModelParams& p, long long N, double T,
                                                    double eps_boundary, double gamma_,
                                                    double mu_prime_factor, bool continue_escape,
                                                    rng::Stream& stream, std::uint64_t budget) {
    const RescaledRectangle rect(p, N, T);
    const double t0 = -rect.t_end_micro;
    const double n = static_cast<double>(N);
    auto field = [&](double t) { return oscillating_field(p, N, t); };

    const BranchSet b0 = branches(p, field(t0));
    if (!b0.m_plus) throw NumericalError("chain_critical_replica: upper branch missing at entry");
    const long long k0 = sample_start_index(p, N, *b0.m_plus, gamma_, stream);

    CriticalReplicaResult res;
    const double m_start = (2.0 * static_cast<double>(k0) - n) / n;
    res.y_entry_dev = std::abs(p.nu * std::cbrt(n) * (m_start - p.m_c) - T);

    const double t_escape = mu_prime_factor * rect.t_end_micro;
    const double t_final = continue_escape ? t_escape : rect.t_end_micro;

    bool decided = false;
    bool horizon_done = false;
    long long k_prev = k0;
    auto y_of = [&](double m) { return (p.nu * std::cbrt(n)) * (m - p.m_c); };

    auto finish_horizon = [&](long long k_at) {
        horizon_done = true;
        if (decided) return;
        const double m = (2.0 * static_cast<double>(k_at) - n) / n;
        const double y = y_of(m);
        res.outcome.terminal = y;
        if (std::abs(y - T) <= eps_boundary) {
            res.outcome.tag = OutcomeTag::EPlus;
            res.outcome.exit_time = T;
            res.outcome.exit_value = y;
        }
        decided = true;
    };

    const ChainEndState end = run_chain(
        p, N, field, t0, t_final, k0, stream, budget, [&](double t, long long k) {
            if (!horizon_done && t > rect.t_end_micro) finish_horizon(k_prev);
            if (!decided) {
                const double m = (2.0 * static_cast<double>(k) - n) / n;
                if (m <= rect.m_lo) {
                    res.outcome.tag = OutcomeTag::EMinus;
                    res.outcome.exit_time = t / rect.time_scale;
                    res.outcome.exit_value = y_of(m);
                    res.outcome.terminal = y_of(m);
                    decided = true;
                } else if (m >= rect.m_hi) {
                    res.outcome.tag = OutcomeTag::Undecided;
                    res.outcome.exit_time = t / rect.time_scale;
                    res.outcome.exit_value = y_of(m);
                    res.outcome.terminal = y_of(m);
                    decided = true;
                }
            }
            k_prev = k;
        });
    if (!horizon_done) finish_horizon(end.k);
    res.events = end.events;
    res.proposals = end.proposals;

    if (continue_escape && res.outcome.is_minus()) {
        res.escape_checked = true;
        const double m_end = (2.0 * static_cast<double>(end.k) - n) / n;
        const BranchSet be = branches(p, field(t_escape));
        if (!be.m_minus) throw NumericalError("chain_critical_replica: lower branch missing");
        res.escape_dev = std::abs(m_end - *be.m_minus);
        res.escape_ok = res.escape_dev <= 1.0 / std::sqrt(n);
    }
    return res;
}

// One replica over the full semi-period N^{2/3}[-pi/2, pi/2] at kappa = 2/3:
// sup deviations from the branches on the stable phase intervals plus the
// critical-window classification, all in one streaming pass.
struct SemiPeriodResult {
    double sup_dev_before = 0.0;      // vs m_+ on [-pi/2, -eta]
    double sup_dev_after_plus = 0.0;  // vs m_+ on [eta, pi/2]
    double sup_dev_after_minus = 0.0; // vs m_- on [eta, pi/2]
    Outcome outcome;
    double m_end = 0.0;
    std::uint64_t events = 0;
    std::uint64_t proposals = 0;
};

struct SemiPeriodCurves {
    BranchCurve plus_before;
    BranchCurve plus_after;
    BranchCurve minus_after;
    double eta;

    static SemiPeriodCurves build(const ModelParams& p, double eta) {
        const double pi_half = 1.5707963267948966;
        return {BranchCurve::build(p, +1, -pi_half, -eta),
                BranchCurve::build(p, +1, eta, pi_half),
                BranchCurve::build(p, -1, eta, pi_half), eta};
    }
};

inline SemiPeriodResult chain_semiperiod_replica(const ModelParams& p, long long N, double T,
                                                 double eps_boundary, double gamma_,
                                                 const SemiPeriodCurves& curves,
                                                 rng::Stream& stream, std::uint64_t budget) {
    const double pi_half = 1.5707963267948966;
    const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);
    const double n = static_cast<double>(N);
    const RescaledRectangle rect(p, N, T);
    auto field = [&](double t) { return oscillating_field(p, N, t); };

    const double t0 = -pi_half * n23;
    const double t1 = pi_half * n23;
    const BranchSet b0 = branches(p, 0.0);
    const long long k0 = sample_start_index(p, N, *b0.m_plus, gamma_, stream);

    SemiPeriodResult res;
    bool decided = false;
    bool horizon_done = false;
    long long k_prev = k0;
    auto y_of = [&](double m) { return (p.nu * std::cbrt(n)) * (m - p.m_c); };
    auto m_of = [&](long long k) { return (2.0 * static_cast<double>(k) - n) / n; };

    auto finish_horizon = [&](long long k_at) {
        horizon_done = true;
        if (decided) return;
        const double y = y_of(m_of(k_at));
        res.outcome.terminal = y;
        if (std::abs(y - T) <= eps_boundary) {
            res.outcome.tag = OutcomeTag::EPlus;
            res.outcome.exit_time = T;
            res.outcome.exit_value = y;
        }
        decided = true;
    };
    auto track = [&](double theta, double m) {
        if (theta <= -curves.eta) {
            if (theta >= -pi_half)
                res.sup_dev_before =
                    std::max(res.sup_dev_before, std::abs(m - curves.plus_before.eval(theta)));
        } else if (theta >= curves.eta) {
            res.sup_dev_after_plus =
                std::max(res.sup_dev_after_plus, std::abs(m - curves.plus_after.eval(theta)));
            res.sup_dev_after_minus =
                std::max(res.sup_dev_after_minus, std::abs(m - curves.minus_after.eval(theta)));
        }
    };

    track(-pi_half, m_of(k0));
    const ChainEndState end = run_chain(
        p, N, field, t0, t1, k0, stream, budget, [&](double t, long long k) {
            const double theta = t / n23;
            const double m = m_of(k);
            // segment endpoints: previous occupation held up to t
            track(theta, m_of(k_prev));
            track(theta, m);
            if (!horizon_done && t > rect.t_end_micro) finish_horizon(k_prev);
            if (!decided && t >= -rect.t_end_micro) {
                if (m <= rect.m_lo) {
                    res.outcome.tag = OutcomeTag::EMinus;
                    res.outcome.exit_time = t / rect.time_scale;
                    res.outcome.exit_value = y_of(m);
                    decided = true;
                } else if (m >= rect.m_hi) {
                    res.outcome.tag = OutcomeTag::Undecided;
                    res.outcome.exit_time = t / rect.time_scale;
                    res.outcome.exit_value = y_of(m);
                    decided = true;
                }
            }
            k_prev = k;
        });
    if (!horizon_done) finish_horizon(end.k);
    res.m_end = m_of(end.k);
    track(pi_half, res.m_end);
    res.events = end.events;
    res.proposals = end.proposals;
    return res;
}

// One replica of the kappa experiment: full semi-period at omega = N^{-kappa},
// classified by the branch sign at the end of the semi-period (h = 0 there,
// so the branches are symmetric and well separated).
struct KappaReplicaResult {
    double m_end = 0.0;
    bool jumped = false;
    std::uint64_t proposals = 0;
};

inline KappaReplicaResult chain_kappa_replica(const ModelParams& p, long long N, double kappa,
                                              double gamma_, rng::Stream& stream,
                                              std::uint64_t budget) {
    const double pi_half = 1.5707963267948966;
    const double nk = std::pow(static_cast<double>(N), kappa);
    auto field = [&](double t) { return oscillating_field_kappa(p, N, kappa, t); };
    const BranchSet b0 = branches(p, 0.0);
    const long long k0 = sample_start_index(p, N, *b0.m_plus, gamma_, stream);
    const ChainEndState end =
        run_chain(p, N, field, -pi_half * nk, pi_half * nk, k0, stream, budget,
                  [](double, long long) {});
    KappaReplicaResult r;
    const double n = static_cast<double>(N);
    r.m_end = (2.0 * static_cast<double>(end.k) - n) / n;
    r.jumped = r.m_end < 0.0;
    r.proposals = end.proposals;
    return r;
}

// Handoff replica: from the stable start -pi/2 N^{2/3} down to the window
// edge -mu T N^{1/3}, recording Y_N(-T') - T' at every requested T' (larger
// horizons are passed earlier in microscopic time) and the tracking sup on
// the traversed phase interval.
struct HandoffReplicaResult {
    double sup_dev_stable = 0.0;
    std::vector<double> y_devs;  // |Y_N(-T') - T'| per requested horizon
    std::uint64_t proposals = 0;
};

inline HandoffReplicaResult chain_handoff_replica(const ModelParams& p, long long N,
                                                  const std::vector<double>& horizons,
                                                  double gamma_, const BranchCurve& plus_curve,
                                                  rng::Stream& stream, std::uint64_t budget,
                                                  double t_end_micro = std::numeric_limits<double>::quiet_NaN()) {
    const double pi_half = 1.5707963267948966;
    const double n = static_cast<double>(N);
    const double n23 = std::pow(n, 2.0 / 3.0);
    const double n13 = std::cbrt(n);
    auto field = [&](double t) { return oscillating_field(p, N, t); };

    std::vector<double> probe_times;
    for (double T : horizons) probe_times.push_back(-p.mu * T * n13);
    std::sort(probe_times.begin(), probe_times.end());
    if (std::isnan(t_end_micro) && probe_times.empty())
        throw DomainError("chain_handoff_replica: need probes or an explicit end time");
    if (!std::isnan(t_end_micro) && !probe_times.empty() && probe_times.back() > t_end_micro)
        throw DomainError("chain_handoff_replica: probes beyond the requested end time");

    const BranchSet b0 = branches(p, 0.0);
    const long long k0 = sample_start_index(p, N, *b0.m_plus, gamma_, stream);

    HandoffReplicaResult res;
    res.y_devs.assign(horizons.size(), std::numeric_limits<double>::quiet_NaN());

    const double t0 = -pi_half * n23;
    const double t1 = std::isnan(t_end_micro) ? probe_times.back() : t_end_micro;
    long long k_prev = k0;
    std::size_t next_probe = 0;
    auto m_of = [&](long long k) { return (2.0 * static_cast<double>(k) - n) / n; };
    auto record_probe = [&](double t_probe, long long k_at) {
        const double y = p.nu * n13 * (m_of(k_at) - p.m_c);
        const double Tp = -t_probe / (p.mu * n13);
        for (std::size_t i = 0; i < horizons.size(); ++i)
            if (std::abs(horizons[i] - Tp) < 1e-9) res.y_devs[i] = std::abs(y - Tp);
    };
    auto track = [&](double theta, double m) {
        if (theta >= -pi_half && theta <= plus_curve.theta_max)
            res.sup_dev_stable = std::max(res.sup_dev_stable,
                                          std::abs(m - plus_curve.eval(theta)));
    };

    track(-pi_half, m_of(k0));
    const ChainEndState end = run_chain(
        p, N, field, t0, t1, k0, stream, budget, [&](double t, long long k) {
            while (next_probe < probe_times.size() && t > probe_times[next_probe]) {
                record_probe(probe_times[next_probe], k_prev);
                ++next_probe;
            }
            const double theta = t / n23;
            track(theta, m_of(k_prev));
            track(theta, m_of(k));
            k_prev = k;
        });
    while (next_probe < probe_times.size()) {
        record_probe(probe_times[next_probe], end.k);
        ++next_probe;
    }
    res.proposals = end.proposals;
    return res;
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

struct KappaCell {
    long long N = 0;
    double kappa = 0.0;
    long long replicas = 0;
    long long jumps = 0;
    double jump_fraction = 0.0;
    double std_error = 0.0;
};

struct KappaSweepReport {
    std::vector<KappaCell> cells;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

inline KappaSweepReport run_kappa_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const ModelParams p = make_params(cfg.beta);
    KappaSweepReport rep;
    rep.config_hash = cfg.hash();
    rep.seed = cfg.seed;
    int cell_idx = 0;
    for (long long N : cfg.N_list) {
        for (double kappa : cfg.kappa_grid) {
            KappaCell cell;
            cell.N = N;
            cell.kappa = kappa;
            cell.replicas = cfg.replicas;
            std::vector<unsigned char> jumped(static_cast<std::size_t>(cfg.replicas), 0);
            parallel_for(cfg.replicas, cfg.threads, [&](long long r) {
                rng::Stream stream(cfg.seed, stream_id(0x10ull + static_cast<std::uint64_t>(cell_idx), r));
                const KappaReplicaResult kr =
                    chain_kappa_replica(p, N, kappa, cfg.gamma, stream, cfg.proposal_budget);
                jumped[static_cast<std::size_t>(r)] = kr.jumped ? 1 : 0;
            });
            for (unsigned char j : jumped) cell.jumps += j;
            cell.jump_fraction = static_cast<double>(cell.jumps) / static_cast<double>(cfg.replicas);
            cell.std_error = std::sqrt(cell.jump_fraction * (1.0 - cell.jump_fraction) /
                                       static_cast<double>(cfg.replicas));
            rep.cells.push_back(cell);
            ++cell_idx;
        }
    }
    return rep;
}

inline PEstimate estimate_p_parallel(const SdeConfig& sc, long long replicas, std::uint64_t seed,
                                     int threads) {
    if (replicas < 100) throw DomainError("estimate_p: need at least 100 replicas");
    std::vector<signed char> tags(static_cast<std::size_t>(replicas), 0);
    parallel_for(replicas, threads, [&](long long r) {
        const Outcome o = estimate_p_replica(sc, seed, r);
        tags[static_cast<std::size_t>(r)] = o.is_plus() ? 1 : (o.is_minus() ? -1 : 0);
    });
    long long np = 0, nm = 0, nu = 0;
    for (signed char t : tags) {
        if (t > 0)
            ++np;
        else if (t < 0)
            ++nm;
        else
            ++nu;
    }
    return tally_p(np, nm, nu);
}

struct MainTheoremPerN {
    long long N = 0;
    long long replicas = 0;
    double freq_track_before = 0.0;   // H+_{gamma'} on [-pi/2, -eta]
    double freq_h_plus_after = 0.0;   // H+_gamma on [eta, pi/2]
    double freq_h_minus_after = 0.0;  // H-_gamma on [eta, pi/2]
    double h_after_sum = 0.0;
    PEstimate chain_window;  // E+- frequencies from the critical window
    double mean_events_per_replica = 0.0;
    std::vector<RunRecord> records;  // one per replica, chain level
};

struct MainTheoremReport {
    std::vector<MainTheoremPerN> per_n;
    PEstimate sde;
    double agreement_z = 0.0;  // |p-_chain - p-_sde| / pooled se, for the largest N
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

inline MainTheoremReport run_main_theorem(const ExperimentConfig& cfg) {
    cfg.validate();
    const ModelParams p = make_params(cfg.beta);
    MainTheoremReport rep;
    rep.config_hash = cfg.hash();
    rep.seed = cfg.seed;

    SdeConfig sc = sde_config(p, cfg.T);
    sc.epsilon_start = cfg.epsilon_start;
    sc.epsilon_boundary = cfg.epsilon_boundary;
    sc.epsilon_class = cfg.epsilon_class;
    sc.dt_max = cfg.dt_max;
    rep.sde = estimate_p_parallel(sc, cfg.replicas, cfg.seed + 1, cfg.threads);

    const SemiPeriodCurves curves = SemiPeriodCurves::build(p, cfg.eta);
    int n_idx = 0;
    for (long long N : cfg.N_list) {
        MainTheoremPerN row;
        row.N = N;
        row.replicas = cfg.replicas;
        std::vector<SemiPeriodResult> results(static_cast<std::size_t>(cfg.replicas));
        std::vector<double> wall(static_cast<std::size_t>(cfg.replicas), 0.0);
        parallel_for(cfg.replicas, cfg.threads, [&](long long r) {
            const auto t_begin = std::chrono::steady_clock::now();
            rng::Stream stream(cfg.seed, stream_id(0x20ull + static_cast<std::uint64_t>(n_idx), r));
            results[static_cast<std::size_t>(r)] = chain_semiperiod_replica(
                p, N, cfg.T, cfg.epsilon_boundary, cfg.gamma, curves, stream, cfg.proposal_budget);
            wall[static_cast<std::size_t>(r)] =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          t_begin)
                    .count();
        });
        const double band_before = std::pow(static_cast<double>(N), -0.5 + cfg.gamma_prime);
        const double band_after = std::pow(static_cast<double>(N), -0.5 + cfg.gamma);
        long long nb = 0, nhp = 0, nhm = 0, np = 0, nm = 0, nu = 0;
        double events_sum = 0.0;
        long long replica_idx = 0;
        for (const SemiPeriodResult& sr : results) {
            nb += sr.sup_dev_before <= band_before;
            nhp += sr.sup_dev_after_plus <= band_after;
            nhm += sr.sup_dev_after_minus <= band_after;
            if (sr.outcome.is_plus())
                ++np;
            else if (sr.outcome.is_minus())
                ++nm;
            else
                ++nu;
            events_sum += static_cast<double>(sr.events);
            RunRecord rec;
            rec.config_hash = cfg.hash();
            rec.replica = replica_idx;
            rec.stream = stream_id(0x20ull + static_cast<std::uint64_t>(n_idx), replica_idx);
            rec.level = "chain";
            rec.outcome = sr.outcome.tag;
            if (sr.outcome.exit_time) rec.exit_time = *sr.outcome.exit_time;
            if (sr.outcome.exit_value) rec.exit_value = *sr.outcome.exit_value;
            rec.h_plus = sr.sup_dev_after_plus <= band_after;
            rec.h_minus = sr.sup_dev_after_minus <= band_after;
            rec.wall_ms = wall[static_cast<std::size_t>(replica_idx)];
            row.records.push_back(rec);
            ++replica_idx;
        }
        const double R = static_cast<double>(cfg.replicas);
        row.freq_track_before = nb / R;
        row.freq_h_plus_after = nhp / R;
        row.freq_h_minus_after = nhm / R;
        row.h_after_sum = (nhp + nhm) / R;
        row.chain_window = tally_p(np, nm, nu);
        row.mean_events_per_replica = events_sum / R;
        rep.per_n.push_back(row);
        ++n_idx;
    }
    if (!rep.per_n.empty()) {
        const PEstimate& cw = rep.per_n.back().chain_window;
        const double pooled = std::sqrt(cw.se_minus * cw.se_minus + rep.sde.se_minus * rep.sde.se_minus);
        rep.agreement_z = std::abs(cw.p_minus - rep.sde.p_minus) / std::max(pooled, 1e-12);
    }
    return rep;
}

struct FullLoopReport {
    long long N = 0;
    int periods = 0;
    long long replicas = 0;
    std::vector<double> jump_fraction_per_criticality;  // conditioned on the at-risk branch
    double lag1_correlation = 0.0;
    double down_jump_fraction = 0.0;  // at h = -h_c crossings
    double up_jump_fraction = 0.0;    // at h = +h_c crossings
    double symmetry_z = 0.0;
    long long both_outcomes_seen = 0;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

// Branch occupancy is read off at the field zeros (phases -pi/2 + j pi),
// where the branches are symmetric and far apart; a jump at criticality j is
// a sign change across it while the replica sat on the merging branch.
inline FullLoopReport run_full_loop(const ExperimentConfig& cfg, int periods_override = 0) {
    cfg.validate();
    const int periods = periods_override > 0 ? periods_override : cfg.periods;
    if (periods < 1) throw ConfigError("run_full_loop: periods must be >= 1");
    const ModelParams p = make_params(cfg.beta);
    const long long N = cfg.N_list.front();
    const double pi = 3.14159265358979323846;
    const double nk = std::pow(static_cast<double>(N), cfg.kappa);
    auto field = [&](double t) { return oscillating_field_kappa(p, N, cfg.kappa, t); };

    const int n_crossings = 2 * periods;  // criticalities at phases 0, pi, 2pi, ...
    FullLoopReport rep;
    rep.N = N;
    rep.periods = periods;
    rep.replicas = cfg.replicas;
    rep.config_hash = cfg.hash();
    rep.seed = cfg.seed;

    std::vector<std::vector<signed char>> signs(static_cast<std::size_t>(cfg.replicas));
    parallel_for(cfg.replicas, cfg.threads, [&](long long r) {
        rng::Stream stream(cfg.seed, stream_id(0x40, r));
        const BranchSet b0 = branches(p, 0.0);
        const long long k0 = sample_start_index(p, N, *b0.m_plus, cfg.gamma, stream);
        std::vector<double> probes;  // field zeros after each criticality
        for (int j = 1; j <= n_crossings; ++j) probes.push_back((-0.5 + j) * pi * nk);
        std::vector<signed char> sgn;
        sgn.push_back(+1);  // start on the upper branch at h = 0
        long long k_prev = k0;
        std::size_t next = 0;
        const double n = static_cast<double>(N);
        const ChainEndState end = run_chain(
            p, N, field, -0.5 * pi * nk, probes.back(), k0, stream, cfg.proposal_budget,
            [&](double t, long long k) {
                while (next < probes.size() && t > probes[next]) {
                    sgn.push_back(((2.0 * static_cast<double>(k_prev) - n) / n) >= 0.0 ? +1 : -1);
                    ++next;
                }
                k_prev = k;
            });
        while (next < probes.size()) {
            sgn.push_back(((2.0 * static_cast<double>(end.k) - n) / n) >= 0.0 ? +1 : -1);
            ++next;
        }
        signs[static_cast<std::size_t>(r)] = std::move(sgn);
    });

    // jump indicators: crossing j has field -h_c for odd j (phase (j-1) pi)
    std::vector<long long> at_risk(static_cast<std::size_t>(n_crossings), 0);
    std::vector<long long> jumped(static_cast<std::size_t>(n_crossings), 0);
    long long down_risk = 0, down_jump = 0, up_risk = 0, up_jump = 0;
    double s_xy = 0, s_x = 0, s_y = 0, s_xx = 0, s_yy = 0;
    long long n_pairs = 0;
    long long seen_plus = 0, seen_minus = 0;
    for (const auto& sgn : signs) {
        std::vector<int> jump_ind;
        for (int j = 1; j <= n_crossings; ++j) {
            const bool minus_field = (j % 2 == 1);  // h = -h_c at this criticality
            const signed char before = sgn[static_cast<std::size_t>(j - 1)];
            const signed char after = sgn[static_cast<std::size_t>(j)];
            const bool risk = minus_field ? (before > 0) : (before < 0);
            if (risk) {
                ++at_risk[static_cast<std::size_t>(j - 1)];
                const bool did = after != before;
                jumped[static_cast<std::size_t>(j - 1)] += did;
                jump_ind.push_back(did ? 1 : 0);
                if (minus_field) {
                    ++down_risk;
                    down_jump += did;
                } else {
                    ++up_risk;
                    up_jump += did;
                }
            } else {
                jump_ind.push_back(-1);  // not at risk; excluded from correlation
            }
            if (after > 0) seen_plus = 1; else seen_minus = 1;
        }
        for (std::size_t j = 0; j + 1 < jump_ind.size(); ++j) {
            if (jump_ind[j] < 0 || jump_ind[j + 1] < 0) continue;
            const double x = jump_ind[j], y = jump_ind[j + 1];
            s_x += x;
            s_y += y;
            s_xx += x * x;
            s_yy += y * y;
            s_xy += x * y;
            ++n_pairs;
        }
    }
    rep.both_outcomes_seen = seen_plus + seen_minus;
    for (int j = 0; j < n_crossings; ++j)
        rep.jump_fraction_per_criticality.push_back(
            at_risk[static_cast<std::size_t>(j)] > 0
                ? static_cast<double>(jumped[static_cast<std::size_t>(j)]) /
                      static_cast<double>(at_risk[static_cast<std::size_t>(j)])
                : 0.0);
    if (n_pairs > 1) {
        const double n = static_cast<double>(n_pairs);
        const double cov = s_xy / n - (s_x / n) * (s_y / n);
        const double vx = s_xx / n - (s_x / n) * (s_x / n);
        const double vy = s_yy / n - (s_y / n) * (s_y / n);
        rep.lag1_correlation = (vx > 0 && vy > 0) ? cov / std::sqrt(vx * vy) : 0.0;
    }
    rep.down_jump_fraction = down_risk ? static_cast<double>(down_jump) / down_risk : 0.0;
    rep.up_jump_fraction = up_risk ? static_cast<double>(up_jump) / up_risk : 0.0;
    const double pd = rep.down_jump_fraction, pu = rep.up_jump_fraction;
    const double se = std::sqrt(pd * (1 - pd) / std::max<long long>(down_risk, 1) +
                                pu * (1 - pu) / std::max<long long>(up_risk, 1));
    rep.symmetry_z = (se > 0) ? std::abs(pd - pu) / se : 0.0;
    return rep;
}

struct StableRegionPerN {
    long long N = 0;
    long long replicas = 0;
    double freq_track_gamma_prime = 0.0;  // sup dev <= N^{-1/2+gamma'}
    double freq_track_gamma = 0.0;        // the no-slack variant
    std::vector<double> horizons;         // T values probed at the handoff
    std::vector<double> exceedance;       // P(|Y_N(-T) - T| > 0.5 | tracking)
    std::vector<double> envelope_c;       // fitted c in exp(-c eps^2 T)
    long long conditioned = 0;
    // escape: conditioned on E-, branch proximity at mu' T N^{1/3}
    long long escape_conditioned = 0;
    double escape_success_rate = 0.0;
};

struct StableRegionReport {
    std::vector<StableRegionPerN> per_n;
    double exceedance_epsilon = 0.5;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

inline StableRegionReport run_stable_region(const ExperimentConfig& cfg) {
    cfg.validate();
    const ModelParams p = make_params(cfg.beta);
    StableRegionReport rep;
    rep.config_hash = cfg.hash();
    rep.seed = cfg.seed;
    const double eps = rep.exceedance_epsilon;

    int n_idx = 0;
    for (long long N : cfg.N_list) {
        StableRegionPerN row;
        row.N = N;
        row.replicas = cfg.replicas;
        row.horizons = {cfg.T, 2.0 * cfg.T};

        const double n13 = std::cbrt(static_cast<double>(N));
        const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);
        const double theta_handoff = -p.mu * cfg.T * n13 / n23;
        const BranchCurve plus_curve =
            BranchCurve::build(p, +1, -1.5707963267948966, std::min(theta_handoff, -1e-6));

        std::vector<HandoffReplicaResult> results(static_cast<std::size_t>(cfg.replicas));
        parallel_for(cfg.replicas, cfg.threads, [&](long long r) {
            rng::Stream stream(cfg.seed, stream_id(0x50ull + static_cast<std::uint64_t>(n_idx), r));
            results[static_cast<std::size_t>(r)] = chain_handoff_replica(
                p, N, row.horizons, cfg.gamma, plus_curve, stream, cfg.proposal_budget);
        });
        const double band_gp = std::pow(static_cast<double>(N), -0.5 + cfg.gamma_prime);
        const double band_g = std::pow(static_cast<double>(N), -0.5 + cfg.gamma);
        long long n_gp = 0, n_g = 0;
        std::vector<long long> exceed(row.horizons.size(), 0);
        long long conditioned = 0;
        for (const HandoffReplicaResult& hr : results) {
            n_gp += hr.sup_dev_stable <= band_gp;
            n_g += hr.sup_dev_stable <= band_g;
            if (hr.sup_dev_stable <= band_gp) {
                ++conditioned;
                for (std::size_t i = 0; i < row.horizons.size(); ++i)
                    exceed[i] += hr.y_devs[i] > eps;
            }
        }
        const double R = static_cast<double>(cfg.replicas);
        row.freq_track_gamma_prime = n_gp / R;
        row.freq_track_gamma = n_g / R;
        row.conditioned = conditioned;
        for (std::size_t i = 0; i < row.horizons.size(); ++i) {
            const double frac =
                conditioned ? static_cast<double>(exceed[i]) / static_cast<double>(conditioned) : 1.0;
            row.exceedance.push_back(frac);
            row.envelope_c.push_back(frac > 0.0
                                         ? -std::log(frac) / (eps * eps * row.horizons[i])
                                         : std::numeric_limits<double>::infinity());
        }

        // escape: conditioned on E- in the critical window, branch proximity
        // at 1.2 mu T N^{1/3}
        std::vector<CriticalReplicaResult> esc(static_cast<std::size_t>(cfg.replicas));
        parallel_for(cfg.replicas, cfg.threads, [&](long long r) {
            rng::Stream stream(cfg.seed, stream_id(0x60ull + static_cast<std::uint64_t>(n_idx), r));
            esc[static_cast<std::size_t>(r)] =
                chain_critical_replica(p, N, cfg.T, cfg.epsilon_boundary, cfg.gamma, 1.2, true,
                                       stream, cfg.proposal_budget);
        });
        long long esc_cond = 0, esc_ok = 0;
        for (const CriticalReplicaResult& cr : esc) {
            if (cr.escape_checked) {
                ++esc_cond;
                esc_ok += cr.escape_ok;
            }
        }
        row.escape_conditioned = esc_cond;
        row.escape_success_rate =
            esc_cond ? static_cast<double>(esc_ok) / static_cast<double>(esc_cond) : 0.0;

        rep.per_n.push_back(row);
        ++n_idx;
    }
    return rep;
}

}  // namespace cwhyst
