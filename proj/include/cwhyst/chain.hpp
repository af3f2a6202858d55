#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cwhyst/errors.hpp"
#include "cwhyst/model.hpp"
#include "cwhyst/outcome.hpp"
#include "cwhyst/rng.hpp"

namespace cwhyst {

// Exact simulation of the time-inhomogeneous magnetization birth-death chain.
// Events are proposed from a homogeneous Poisson clock of rate N (which
// dominates c+ + c- <= N) and accepted with probability c+-/N evaluated at the
// proposal time, so the realization is statistically exact for time-varying
// fields with no discretization bias.

struct ChainState {
    long long N = 2;
    long long k = 0;  // number of +1 spins; single source of truth
    double t = 0.0;

    double m() const { return (2.0 * static_cast<double>(k) - static_cast<double>(N)) / static_cast<double>(N); }
};

inline long long lattice_index(long long N, double m) {
    const double x = (m + 1.0) * static_cast<double>(N) / 2.0;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x)) + 1e-9 || r < 0 || r > static_cast<double>(N))
        throw DomainError("lattice_index: m is not a lattice magnetization");
    return static_cast<long long>(r);
}

struct Rates {
    double c_plus;
    double c_minus;
};

// c+-(m,h) = (N/2)(1 -+ m) chat+-(m,h) with
// chat+- = e^{+-beta[h+(m+-1/N)]} / (e^{-beta[h+(m+-1/N)]} + e^{beta[h+(m+-1/N)]}).
inline Rates rates(const ModelParams& p, long long N, double m, double h) {
    (void)lattice_index(N, m);  // lattice membership check
    const double inv_n = 1.0 / static_cast<double>(N);
    const double chat_p = 0.5 * (1.0 + std::tanh(p.beta * (h + m + inv_n)));
    const double chat_m = 0.5 * (1.0 - std::tanh(p.beta * (h + m - inv_n)));
    return {0.5 * static_cast<double>(N) * (1.0 - m) * chat_p,
            0.5 * static_cast<double>(N) * (1.0 + m) * chat_m};
}

// F_N = (2/N)(c+ - c-), the generator applied to m.
inline double drift_FN(const ModelParams& p, long long N, double m, double h) {
    const Rates r = rates(p, N, m, h);
    return 2.0 / static_cast<double>(N) * (r.c_plus - r.c_minus);
}

// G_N = (4/N^2)(c+ + c-), the generator's carre-du-champ on m.
inline double var_GN(const ModelParams& p, long long N, double m, double h) {
    const Rates r = rates(p, N, m, h);
    return 4.0 / (static_cast<double>(N) * static_cast<double>(N)) * (r.c_plus + r.c_minus);
}

struct ChainEndState {
    long long k = 0;
    double t = 0.0;
    std::uint64_t proposals = 0;
    std::uint64_t events = 0;
};

inline constexpr std::uint64_t kDefaultProposalBudget = 1ull << 34;

// Streaming core of the thinning simulation. `h_of_t(t)` is the instantaneous
// field; `visit(t, k)` is called after every accepted jump. Returns the final
// state. Throws ResourceError when the proposal budget is exhausted.
template <class Field, class Visitor>
ChainEndState run_chain(const ModelParams& p, long long N, Field&& h_of_t, double t_start,
                        double t_end, long long k_start, rng::Stream& stream,
                        std::uint64_t proposal_budget, Visitor&& visit) {
    if (N < 2) throw DomainError("run_chain: N must be >= 2");
    if (!(t_start <= t_end)) throw DomainError("run_chain: need t_start <= t_end");
    if (k_start < 0 || k_start > N) throw DomainError("run_chain: k_start outside {0..N}");

    const double n = static_cast<double>(N);
    const double inv_n = 1.0 / n;
    const double tanh_bn = std::tanh(p.beta * inv_n);

    ChainEndState st;
    st.k = k_start;
    st.t = t_start;

    double m = (2.0 * static_cast<double>(st.k) - n) * inv_n;
    while (true) {
        st.t += stream.exponential(n);
        if (st.t > t_end) {
            st.t = t_end;
            return st;
        }
        if (++st.proposals > proposal_budget)
            throw ResourceError("run_chain: proposal budget exhausted");

        const double h = h_of_t(st.t);
        // tanh(beta(h+m) +- beta/N) via the addition rule: one tanh per proposal
        const double th = std::tanh(p.beta * (h + m));
        const double tp = (th + tanh_bn) / (1.0 + th * tanh_bn);
        const double tm = (th - tanh_bn) / (1.0 - th * tanh_bn);
        const double acc_plus = 0.25 * (1.0 - m) * (1.0 + tp);   // c+/N
        const double acc_minus = 0.25 * (1.0 + m) * (1.0 - tm);  // c-/N

        const double u = stream.uniform();
        if (u < acc_plus) {
            ++st.k;
        } else if (u < acc_plus + acc_minus) {
            --st.k;
        } else {
            continue;
        }
        ++st.events;
        m = (2.0 * static_cast<double>(st.k) - n) * inv_n;
        visit(st.t, st.k);
    }
}

struct JumpEvent {
    double t;
    long long k;  // occupation after the jump
};

// Boundary thresholds of the rescaled rectangle, mapped back to magnetization
// values. The scaling constants are combined in extended precision since the
// jumps are of order N^{-2/3}.
struct RescaledRectangle {
    double m_lo, m_hi;      // |Y| <= 2T in magnetization units
    double t_end_micro;     // microscopic time of the rescaled horizon T
    double time_scale;

    RescaledRectangle(const ModelParams& p, long long N, double T) {
        const long double n13 = std::cbrt(static_cast<long double>(N));
        const long double half = 2.0L * static_cast<long double>(T) /
                                 (static_cast<long double>(p.nu) * n13);
        m_lo = static_cast<double>(static_cast<long double>(p.m_c) - half);
        m_hi = static_cast<double>(static_cast<long double>(p.m_c) + half);
        time_scale = static_cast<double>(static_cast<long double>(p.mu) * n13);
        t_end_micro = static_cast<double>(static_cast<long double>(p.mu) * n13 *
                                          static_cast<long double>(T));
    }
};

struct ChainTrajectory {
    ModelParams params;
    long long N = 2;
    double t_start = 0.0, t_end = 0.0;
    long long k_start = 0;
    std::vector<JumpEvent> events;
    int decimation = 1;
    bool crossings_kept = false;  // rectangle-boundary crossings stored despite decimation
    std::uint64_t total_events = 0;
    std::uint64_t total_proposals = 0;

    double m_start() const {
        return (2.0 * static_cast<double>(k_start) - static_cast<double>(N)) / static_cast<double>(N);
    }

    // Right-continuous step reconstruction of m(t).
    double value_at(double t) const {
        if (t < t_start - 1e-12 || t > t_end + 1e-12)
            throw RangeError("ChainTrajectory::value_at: time outside trajectory");
        auto it = std::upper_bound(events.begin(), events.end(), t,
                                   [](double tt, const JumpEvent& e) { return tt < e.t; });
        const long long k = (it == events.begin()) ? k_start : std::prev(it)->k;
        return (2.0 * static_cast<double>(k) - static_cast<double>(N)) / static_cast<double>(N);
    }
};

// Exact realization of the jump chain; stores every `decimate`-th event
// (full resolution by default). When `keep_crossings` is supplied, every
// event that crosses one of the rectangle thresholds is stored regardless of
// the decimation, so exit classification stays exact on long decimated runs.
template <class Field>
ChainTrajectory simulate(const ModelParams& p, long long N, Field&& h_of_t, double t_start,
                         double t_end, double m_start, rng::Stream& stream,
                         std::uint64_t proposal_budget = kDefaultProposalBudget, int decimate = 1,
                         const RescaledRectangle* keep_crossings = nullptr) {
    if (decimate < 1) throw DomainError("simulate: decimate must be >= 1");
    ChainTrajectory traj;
    traj.params = p;
    traj.N = N;
    traj.t_start = t_start;
    traj.t_end = t_end;
    traj.k_start = lattice_index(N, m_start);
    traj.decimation = decimate;
    traj.crossings_kept = keep_crossings != nullptr;
    std::uint64_t i = 0;
    const double n = static_cast<double>(N);
    long long k_prev = traj.k_start;
    const ChainEndState end = run_chain(
        p, N, h_of_t, t_start, t_end, traj.k_start, stream, proposal_budget,
        [&](double t, long long k) {
            bool keep = i++ % static_cast<std::uint64_t>(decimate) == 0;
            if (!keep && keep_crossings) {
                const double m_prev = (2.0 * static_cast<double>(k_prev) - n) / n;
                const double m = (2.0 * static_cast<double>(k) - n) / n;
                keep = (m <= keep_crossings->m_lo) != (m_prev <= keep_crossings->m_lo) ||
                       (m >= keep_crossings->m_hi) != (m_prev >= keep_crossings->m_hi);
            }
            if (keep) traj.events.push_back({t, k});
            k_prev = k;
        });
    traj.total_events = end.events;
    traj.total_proposals = end.proposals;
    if (decimate > 1 && (traj.events.empty() || traj.events.back().k != end.k))
        traj.events.push_back({end.t, end.k});
    return traj;
}

// Critically rescaled view Y_N(s) = nu N^{1/3} (m_N(mu N^{1/3} s) - m_c).
// Pure reindexing of the underlying trajectory; no values are copied.
struct RescaledView {
    const ChainTrajectory* traj = nullptr;
    double T = 0.0;

    double time_scale() const { return traj->params.mu * std::cbrt(static_cast<double>(traj->N)); }
    double space_scale() const { return traj->params.nu * std::cbrt(static_cast<double>(traj->N)); }

    bool covers(double s) const {
        const double tm = time_scale() * s;
        return tm >= traj->t_start - 1e-9 && tm <= traj->t_end + 1e-9;
    }

    double value(double s) const {
        if (!covers(s)) throw RangeError("RescaledView::value: rescaled time outside coverage");
        return space_scale() * (traj->value_at(time_scale() * s) - traj->params.m_c);
    }
};

inline RescaledView rescaled_path(const ChainTrajectory& traj, double T) {
    RescaledView v{&traj, T};
    if (!v.covers(-T) || !v.covers(T))
        throw RangeError("rescaled_path: trajectory does not cover the window [-T, T]");
    return v;
}

// First exit of the rescaled path from R_T, checked after every jump.
// Decimated trajectories are accepted when their boundary crossings were
// preserved; exits are then still located exactly, while the horizon value
// may be stale by at most decimation-1 jumps of size 2 nu N^{-2/3}.
inline Outcome classify_exit(const RescaledView& view, double T, double epsilon) {
    if (view.traj->decimation != 1 && !view.traj->crossings_kept)
        throw DomainError(
            "classify_exit: decimated trajectory without preserved boundary crossings");
    const ChainTrajectory& traj = *view.traj;
    const ModelParams& p = traj.params;
    const RescaledRectangle rect(p, traj.N, T);
    const double n = static_cast<double>(traj.N);

    auto m_of = [&](long long k) { return (2.0 * static_cast<double>(k) - n) / n; };
    auto y_of = [&](double m) { return view.space_scale() * (m - p.m_c); };

    Outcome out;
    auto check_state = [&](double t_micro, long long k) -> bool {
        if (t_micro < -rect.t_end_micro) return false;
        const double m = m_of(k);
        if (m <= rect.m_lo) {
            out.tag = OutcomeTag::EMinus;
            out.exit_time = t_micro / rect.time_scale;
            out.exit_value = y_of(m);
            out.terminal = y_of(m);
            return true;
        }
        if (m >= rect.m_hi) {
            out.tag = OutcomeTag::Undecided;
            out.exit_time = t_micro / rect.time_scale;
            out.exit_value = y_of(m);
            out.terminal = y_of(m);
            return true;
        }
        return false;
    };

    if (check_state(-rect.t_end_micro, traj.k_start)) return out;
    long long k = traj.k_start;
    for (const JumpEvent& e : traj.events) {
        if (e.t > rect.t_end_micro) break;
        k = e.k;
        if (check_state(e.t, k)) return out;
    }
    // reached the rescaled horizon inside the strip
    const double yT = view.value(T);
    out.terminal = yT;
    if (std::abs(yT - T) <= epsilon) {
        out.tag = OutcomeTag::EPlus;
        out.exit_time = T;
        out.exit_value = yT;
    }
    return out;
}

// Equilibrium branch m_{+-}(h_N(theta N^{2/3})) tabulated against the phase
// theta; linear interpolation (the branch is Lipschitz in theta, including at
// the tangency where its h-derivative blows up).
struct BranchCurve {
    double theta_min = 0.0, theta_max = 0.0;
    std::vector<double> values;
    int sign = +1;

    static BranchCurve build(const ModelParams& p, int sign, double theta_min, double theta_max,
                             int n_nodes = 4096) {
        if (!(theta_max > theta_min)) throw DomainError("BranchCurve: empty phase interval");
        BranchCurve c;
        c.theta_min = theta_min;
        c.theta_max = theta_max;
        c.sign = sign;
        c.values.resize(static_cast<std::size_t>(n_nodes) + 1);
        for (int i = 0; i <= n_nodes; ++i) {
            const double theta = theta_min + (theta_max - theta_min) * i / n_nodes;
            const double h = -p.h_c * std::cos(theta);
            const BranchSet b = branches(p, h);
            const std::optional<double>& v = (sign > 0) ? b.m_plus : b.m_minus;
            if (!v) throw NumericalError("BranchCurve: requested branch does not exist on interval");
            c.values[static_cast<std::size_t>(i)] = *v;
        }
        return c;
    }

    double eval(double theta) const {
        if (theta < theta_min - 1e-12 || theta > theta_max + 1e-12)
            throw RangeError("BranchCurve::eval: phase outside table");
        const double x = (theta - theta_min) / (theta_max - theta_min) *
                         static_cast<double>(values.size() - 1);
        const std::size_t i = std::min(static_cast<std::size_t>(std::max(x, 0.0)),
                                       values.size() - 2);
        const double s = x - static_cast<double>(i);
        return (1.0 - s) * values[i] + s * values[i + 1];
    }
};

// H^{+-}_gamma event on the phase interval [a, b] (microscopic times
// N^{2/3}[a, b]): sup_t |m_N(t) - m_{+-}(h_N(t))| <= N^{-1/2+gamma}.
// The branch moves monotonically between jumps, so the supremum is attained
// at segment endpoints.
inline bool branch_tracking(const ChainTrajectory& traj, int sign, double a, double b,
                            double gamma_, const BranchCurve* curve = nullptr) {
    const ModelParams& p = traj.params;
    const double n23 = std::pow(static_cast<double>(traj.N), 2.0 / 3.0);
    const double t_lo = a * n23, t_hi = b * n23;
    if (t_lo < traj.t_start - 1e-9 || t_hi > traj.t_end + 1e-9)
        throw RangeError("branch_tracking: trajectory does not cover N^{2/3}[a,b]");
    const double band = std::pow(static_cast<double>(traj.N), -0.5 + gamma_);

    BranchCurve local;
    if (!curve) {
        local = BranchCurve::build(p, sign, a, b);
        curve = &local;
    }
    const double nn = static_cast<double>(traj.N);
    auto m_of = [&](long long k) { return (2.0 * static_cast<double>(k) - nn) / nn; };
    auto dev = [&](double m, double t_micro) {
        return std::abs(m - curve->eval(t_micro / n23));
    };

    long long k = traj.k_start;
    double seg_start = traj.t_start;
    auto segment_ok = [&](double s0, double s1, long long kk) {
        const double lo = std::max(s0, t_lo), hi = std::min(s1, t_hi);
        if (lo > hi) return true;
        const double m = m_of(kk);
        if (dev(m, lo) > band || dev(m, hi) > band) return false;
        // the branch is monotone except across the criticality at t = 0
        if (lo < 0.0 && hi > 0.0 && dev(m, 0.0) > band) return false;
        return true;
    };
    for (const JumpEvent& e : traj.events) {
        if (!segment_ok(seg_start, e.t, k)) return false;
        if (e.t > t_hi) return true;
        k = e.k;
        seg_start = e.t;
    }
    return segment_ok(seg_start, traj.t_end, k);
}

// Empirical distribution of sup_{t<=T} |m_N(t) - mbar(t)| over replicas.
// `mbar` must be evaluable on [t_start, t_start+T].
template <class Field, class MBar>
std::vector<double> lln_sup_deviations(const ModelParams& p, long long N, Field&& h_of_t,
                                       double t_start, double T, double m_start, MBar&& mbar,
                                       long long replicas, std::uint64_t seed,
                                       std::uint64_t budget = kDefaultProposalBudget) {
    std::vector<double> sup(static_cast<std::size_t>(replicas), 0.0);
    const long long k0 = lattice_index(N, m_start);
    const double n = static_cast<double>(N);
    for (long long r = 0; r < replicas; ++r) {
        rng::Stream stream(seed, static_cast<std::uint64_t>(r));
        double worst = std::abs((2.0 * static_cast<double>(k0) - n) / n - mbar(t_start));
        run_chain(p, N, h_of_t, t_start, t_start + T, k0, stream, budget,
                  [&](double t, long long k) {
                      const double m = (2.0 * static_cast<double>(k) - n) / n;
                      worst = std::max(worst, std::abs(m - mbar(t)));
                  });
        sup[static_cast<std::size_t>(r)] = worst;
    }
    return sup;
}

// Handoff statistic |Y_N(-T) - T| for a chain-level path.
inline double start_consistency(const RescaledView& view, double T) {
    return std::abs(view.value(-T) - T);
}

}  // namespace cwhyst
