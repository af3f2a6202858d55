#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cwhyst/errors.hpp"
#include "cwhyst/model.hpp"
#include "cwhyst/outcome.hpp"
#include "cwhyst/rng.hpp"

namespace cwhyst {

// Numerical integration of the limit SDE dY = (t^2 - Y^2) dt + xi dw on
// R u {-inf}, with certified explosion detection, exit classification against
// the rectangle R_T, same-noise coupling and Monte Carlo estimation of p+-.

struct SdeConfig {
    double xi;                // noise amplitude multiplying dw
    double T = 5.0;           // window half-width
    double epsilon_start = 0.2;
    // Width of the E+ arrival band at t = T. The terminal spread of the
    // tracking paths is ~ xi/(2 sqrt(T)) (about 0.6 at beta = 2, T = 5), so
    // narrower bands reclassify a large survivor fraction as Undecided.
    double epsilon_boundary = 1.2;
    double epsilon_class = 0.2;  // tracking-regime tolerance used by diagnostics
    double dt_max = 1e-3;        // base noise grid step
    double barrier = 15.0;       // explosion certification floor B >= 3T

    void validate() const {
        if (!(xi >= 0.0)) throw DomainError("SdeConfig: xi must be >= 0");
        if (!(T > 0.0)) throw DomainError("SdeConfig: T must be > 0");
        if (!(dt_max > 0.0)) throw DomainError("SdeConfig: dt_max must be > 0");
        if (!(barrier >= 3.0 * T)) throw DomainError("SdeConfig: barrier must be >= 3T");
        if (!(epsilon_start > 0.0 && epsilon_boundary > 0.0 && epsilon_class > 0.0))
            throw DomainError("SdeConfig: tolerances must be > 0");
    }
};

inline SdeConfig sde_config(const ModelParams& p, double T = 5.0) {
    SdeConfig c;
    c.xi = p.sde_noise();
    c.T = T;
    c.barrier = 3.0 * T;
    c.validate();
    return c;
}

inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

struct SdePath {
    std::vector<double> t;
    std::vector<double> y;  // kMinusInf after the explosion certification
    bool exploded = false;
    std::optional<double> Pi;  // explosion (certification) time

    bool covers(double ti) const {
        if (t.empty()) return false;
        if (exploded && Pi && ti >= *Pi) return true;  // absorbed at -inf from Pi on
        return ti >= t.front() - 1e-12 && ti <= t.back() + 1e-12;
    }

    // Right-continuous value on the stored grid; -inf past the explosion.
    double value_at(double ti) const {
        if (!covers(ti)) throw RangeError("SdePath::value_at: time outside path");
        if (exploded && Pi && ti >= *Pi) return kMinusInf;
        auto it = std::upper_bound(t.begin(), t.end(), ti);
        std::size_t i = (it == t.begin()) ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
        return y[i];
    }
};

namespace detail_sde {

// One base step: drift advanced with adaptive Euler sub-steps, then the
// pre-generated Brownian increment added once. Returns false if the path hit
// the certified-explosion envelope inside this step (time written to t_expl).
inline bool advance_base_step(double& y, double t, double dt, double dW, double xi,
                              double barrier, double dt_max, double& t_expl) {
    auto certified = [&](double tt, double yy) { return yy <= -std::max(barrier, std::abs(tt) + 3.0); };
    double tau = 0.0;
    long guard = 0;
    while (tau < dt) {
        const double tt = t + tau;
        double h = std::min(dt - tau, std::min(dt_max, 0.1 / (1.0 + y * y + tt * tt)));
        if (h <= 0.0 || ++guard > 4'000'000)
            throw NumericalError("sde: drift sub-step collapsed without explosion certification");
        y += h * (tt * tt - y * y);
        tau += h;
        if (certified(t + tau, y)) {
            t_expl = t + tau;
            return false;
        }
    }
    y += xi * dW;
    if (certified(t + dt, y)) {
        t_expl = t + dt;
        return false;
    }
    return true;
}

}  // namespace detail_sde

// Core stepper shared by all SDE entry points. `noise(k)` must return the
// Brownian increment for base step k (so coupled paths can share increments
// and refinement tests can supply a fixed path); `observe(t, y)` is called on
// every base grid node, starting with (t_start, y_start).
template <class Noise, class Observe>
inline void run_sde(const SdeConfig& cfg, double t_start, double y_start, double t_end,
                    Noise&& noise, Observe&& observe) {
    cfg.validate();
    if (!(t_start < t_end)) throw DomainError("run_sde: need t_start < t_end");
    if (!std::isfinite(y_start)) throw DomainError("run_sde: y_start must be finite");

    const long n_steps = static_cast<long>(std::ceil((t_end - t_start) / cfg.dt_max - 1e-12));
    double y = y_start;
    observe(t_start, y);
    for (long k = 0; k < n_steps; ++k) {
        const double t0 = t_start + cfg.dt_max * k;
        const double t1 = (k + 1 == n_steps) ? t_end : t_start + cfg.dt_max * (k + 1);
        const double dt = t1 - t0;
        const double dW = noise(k) * std::sqrt(dt / cfg.dt_max);  // partial last step
        double t_expl = 0.0;
        if (!detail_sde::advance_base_step(y, t0, dt, dW, cfg.xi, cfg.barrier, cfg.dt_max, t_expl)) {
            observe(t_expl, kMinusInf);
            return;
        }
        observe(t1, y);
    }
}

// Strong numerical solution on the base grid; increments drawn from `stream`.
inline SdePath integrate_sde(const SdeConfig& cfg, double t_start, double y_start, double t_end,
                             rng::Stream stream) {
    SdePath path;
    run_sde(cfg, t_start, y_start, t_end,
            [&](long) { return std::sqrt(cfg.dt_max) * stream.normal(); },
            [&](double t, double y) {
                path.t.push_back(t);
                path.y.push_back(y);
                if (y == kMinusInf && !path.exploded) {
                    path.exploded = true;
                    path.Pi = t;
                }
            });
    return path;
}

// First exit from R_T scanned on the stored grid.
inline Outcome classify(const SdePath& path, const SdeConfig& cfg) {
    const double T = cfg.T;
    Outcome out;
    for (std::size_t i = 0; i < path.t.size(); ++i) {
        const double t = path.t[i];
        const double y = path.y[i];
        if (t > T + 1e-12) break;
        if (y == kMinusInf || y <= -2.0 * T) {
            out.tag = OutcomeTag::EMinus;
            out.exit_time = t;
            out.exit_value = (y == kMinusInf) ? -2.0 * T : y;
            out.terminal = y;
            return out;
        }
        if (y >= 2.0 * T) {  // top edge: outside both marked boundary pieces
            out.tag = OutcomeTag::Undecided;
            out.exit_time = t;
            out.exit_value = y;
            out.terminal = y;
            return out;
        }
        if (t >= T - 1e-12) {
            out.terminal = y;
            if (std::abs(y - T) <= cfg.epsilon_boundary) {
                out.tag = OutcomeTag::EPlus;
                out.exit_time = t;
                out.exit_value = y;
            }
            return out;
        }
    }
    if (path.exploded) {
        out.tag = OutcomeTag::EMinus;
        out.exit_time = path.Pi;
        out.exit_value = -2.0 * T;
        return out;
    }
    throw RangeError("classify: path does not cover [-T, T]");
}

// Single-pass classification without path storage (used by the estimators).
inline Outcome classify_stream(const SdeConfig& cfg, double y_start, rng::Stream stream) {
    const double T = cfg.T;
    Outcome out;
    bool decided = false;
    run_sde(cfg, -T, y_start, T,
            [&](long) { return std::sqrt(cfg.dt_max) * stream.normal(); },
            [&](double t, double y) {
                if (decided) return;
                if (y == kMinusInf || y <= -2.0 * T) {
                    out.tag = OutcomeTag::EMinus;
                    out.exit_time = t;
                    out.exit_value = (y == kMinusInf) ? -2.0 * T : y;
                    out.terminal = y;
                    decided = true;
                } else if (y >= 2.0 * T) {
                    out.tag = OutcomeTag::Undecided;
                    out.exit_time = t;
                    out.exit_value = y;
                    out.terminal = y;
                    decided = true;
                } else if (t >= T - 1e-12) {
                    out.terminal = y;
                    if (std::abs(y - T) <= cfg.epsilon_boundary) {
                        out.tag = OutcomeTag::EPlus;
                        out.exit_time = t;
                        out.exit_value = y;
                    }
                    decided = true;
                }
            });
    if (!decided) throw NumericalError("classify_stream: integration ended undecided");
    return out;
}

struct PEstimate {
    long long n_plus = 0, n_minus = 0, n_undecided = 0;
    long long replicas = 0;
    double p_plus = 0.0, p_minus = 0.0, undecided_rate = 0.0;
    double se_plus = 0.0, se_minus = 0.0;
};

inline PEstimate tally_p(long long n_plus, long long n_minus, long long n_undecided) {
    PEstimate e;
    e.n_plus = n_plus;
    e.n_minus = n_minus;
    e.n_undecided = n_undecided;
    e.replicas = n_plus + n_minus + n_undecided;
    const double R = static_cast<double>(e.replicas);
    e.p_plus = n_plus / R;
    e.p_minus = n_minus / R;
    e.undecided_rate = n_undecided / R;
    e.se_plus = std::sqrt(e.p_plus * (1.0 - e.p_plus) / R);
    e.se_minus = std::sqrt(e.p_minus * (1.0 - e.p_minus) / R);
    return e;
}

// Replica r draws its own stream (seed, r); the first draw fixes the starting
// point uniformly on [T - eps_start, T + eps_start].
inline Outcome estimate_p_replica(const SdeConfig& cfg, std::uint64_t seed, long long replica) {
    rng::Stream stream(seed, static_cast<std::uint64_t>(replica));
    const double y0 = cfg.T + cfg.epsilon_start * (2.0 * stream.uniform() - 1.0);
    return classify_stream(cfg, y0, stream);
}

inline PEstimate estimate_p(const SdeConfig& cfg, long long replicas, std::uint64_t seed) {
    if (replicas < 100) throw DomainError("estimate_p: need at least 100 replicas");
    long long np = 0, nm = 0, nu = 0;
    for (long long r = 0; r < replicas; ++r) {
        const Outcome o = estimate_p_replica(cfg, seed, r);
        if (o.is_plus())
            ++np;
        else if (o.is_minus())
            ++nm;
        else
            ++nu;
    }
    return tally_p(np, nm, nu);
}

struct CoupledPaths {
    SdePath lower;            // started from y
    SdePath upper;            // started from y_bar > y
    std::vector<double> t;    // shared base grid
    std::vector<double> x;    // upper - lower while both finite
};

// Two solutions driven by the identical increment sequence. Noise is drawn
// once per base step independently of either path's drift sub-stepping, so
// the shared-noise semantics are exact.
inline CoupledPaths couple(const SdeConfig& cfg, double t_start, double y, double y_bar,
                           double t_end, std::uint64_t seed) {
    if (!(y_bar >= y)) throw DomainError("couple: need y_bar >= y");
    rng::Stream stream(seed, 0);
    const long n_steps = static_cast<long>(std::ceil((t_end - t_start) / cfg.dt_max - 1e-12));
    std::vector<double> dW(static_cast<std::size_t>(n_steps));
    for (long k = 0; k < n_steps; ++k) dW[static_cast<std::size_t>(k)] = std::sqrt(cfg.dt_max) * stream.normal();

    CoupledPaths cp;
    auto run_one = [&](double y0, SdePath& out) {
        run_sde(cfg, t_start, y0, t_end,
                [&](long k) { return dW[static_cast<std::size_t>(k)]; },
                [&](double t, double yy) {
                    out.t.push_back(t);
                    out.y.push_back(yy);
                    if (yy == kMinusInf && !out.exploded) {
                        out.exploded = true;
                        out.Pi = t;
                    }
                });
    };
    run_one(y, cp.lower);
    run_one(y_bar, cp.upper);

    const std::size_t n = std::min(cp.lower.t.size(), cp.upper.t.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (cp.lower.y[i] == kMinusInf || cp.upper.y[i] == kMinusInf) break;
        cp.t.push_back(cp.lower.t[i]);
        cp.x.push_back(cp.upper.y[i] - cp.lower.y[i]);
    }
    return cp;
}

// Handoff deviation |Y(-T) - T| (Theorem-level start-consistency statistic).
inline double start_consistency(const SdePath& path, double T) {
    return std::abs(path.value_at(-T) - T);
}

}  // namespace cwhyst
