#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "cwhyst/errors.hpp"
#include "cwhyst/model.hpp"

namespace cwhyst {

// Deterministic backbone: the Riccati equation y' = t^2 - y^2 (critical
// trajectory y*, tracking trajectory y+, blowup times) and the macroscopic
// flow m' = F(m, h(t)).

struct OdeSolution {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> f;  // derivative at the nodes, for Hermite evaluation
    std::optional<double> blowup_time;
    double t0 = 0.0, y0 = 0.0, tol = 0.0;

    double t_front() const { return t.front(); }
    double t_back() const { return t.back(); }

    bool covers(double ti) const {
        return !t.empty() && ti >= t.front() - 1e-12 && ti <= t.back() + 1e-12;
    }

    // Cubic Hermite interpolation between accepted integrator steps.
    double eval(double ti) const {
        if (!covers(ti)) throw RangeError("OdeSolution::eval: time outside solution range");
        auto it = std::upper_bound(t.begin(), t.end(), ti);
        std::size_t i = (it == t.begin()) ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
        if (i + 1 >= t.size()) i = t.size() - 2;
        if (t.size() == 1) return y[0];
        const double h = t[i + 1] - t[i];
        const double s = (ti - t[i]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        return h00 * y[i] + h10 * h * f[i] + h01 * y[i + 1] + h11 * h * f[i + 1];
    }
};

namespace detail_ode {

// Dormand-Prince 5(4) embedded pair, scalar state, adaptive step control.
// `stop` is polled after every accepted step; returning true ends the
// integration (used for blowup chasing and event detection).
template <class RHS, class Stop>
OdeSolution rk45(RHS&& rhs, double t0, double y0, double t_end, double tol, Stop&& stop) {
    if (!(t0 != t_end)) {
        OdeSolution s;
        s.t = {t0};
        s.y = {y0};
        s.f = {rhs(t0, y0)};
        s.t0 = t0;
        s.y0 = y0;
        s.tol = tol;
        return s;
    }
    const double dir = (t_end > t0) ? 1.0 : -1.0;
    const double atol = tol, rtol = tol;

    OdeSolution sol;
    sol.t0 = t0;
    sol.y0 = y0;
    sol.tol = tol;

    double t = t0, y = y0;
    double k1 = rhs(t, y);
    sol.t.push_back(t);
    sol.y.push_back(y);
    sol.f.push_back(k1);

    double h = dir * std::min(1e-2, std::abs(t_end - t0));
    const double hmin = 1e-14 * (1.0 + std::abs(t0) + std::abs(t_end));
    long iter_guard = 0;

    while (dir * (t_end - t) > 0.0) {
        if (++iter_guard > 40'000'000)
            throw NumericalError("rk45: iteration budget exhausted");
        if (dir * (t + h) > dir * t_end) h = t_end - t;

        const double k2 = rhs(t + h / 5.0, y + h * (k1 / 5.0));
        const double k3 = rhs(t + 3.0 * h / 10.0, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
        const double k4 = rhs(t + 4.0 * h / 5.0,
                              y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
        const double k5 = rhs(t + 8.0 * h / 9.0,
                              y + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                                       64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4));
        const double k6 = rhs(t + h, y + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 +
                                              46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4 -
                                              5103.0 / 18656.0 * k5));
        const double y1 = y + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 -
                                   2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6);
        const double k7 = rhs(t + h, y1);
        const double err = h * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4 -
                                17253.0 / 339200.0 * k5 + 22.0 / 525.0 * k6 - 1.0 / 40.0 * k7);
        const double sc = atol + rtol * std::max(std::abs(y), std::abs(y1));
        const double en = std::abs(err) / sc;

        if (en <= 1.0 || std::abs(h) <= hmin) {
            t += h;
            y = y1;
            k1 = k7;  // FSAL
            sol.t.push_back(t);
            sol.y.push_back(y);
            sol.f.push_back(k1);
            if (stop(t, y)) break;
        }
        double fac = 0.9 * std::pow(std::max(en, 1e-16), -0.2);
        fac = std::clamp(fac, 0.2, 5.0);
        h *= fac;
        if (!std::isfinite(y))
            throw NumericalError("rk45: state became non-finite");
        if (std::abs(h) < hmin) h = dir * hmin;
    }
    if (dir < 0.0) {  // keep stored grids ascending
        std::reverse(sol.t.begin(), sol.t.end());
        std::reverse(sol.y.begin(), sol.y.end());
        std::reverse(sol.f.begin(), sol.f.end());
    }
    return sol;
}

inline double riccati_rhs(double t, double y) { return t * t - y * y; }

// Certified-blowup envelope: below y = -(|t|+3) the drift is dominated by
// -(y^2 - t^2) <= -(6|t|+9), so the solution reaches -infinity in finite time.
inline bool below_blowup_envelope(double t, double y) { return y <= -(std::abs(t) + 3.0); }

}  // namespace detail_ode

// Adaptive solution of y' = t^2 - y^2. If the trajectory falls below the
// certified-blowup envelope it is chased down to |y| = 1e8 and blowup_time is
// set to the crossing time plus the 1/|y| residual of the pure -y^2 flow,
// which brackets the true explosion time to ~1e-8.
inline OdeSolution solve_riccati(double t0, double y0, double t_end, double tol = 1e-10) {
    if (!(t0 < t_end)) throw DomainError("solve_riccati: need t0 < t_end");
    constexpr double kHuge = 1e8;
    OdeSolution sol = detail_ode::rk45(detail_ode::riccati_rhs, t0, y0, t_end, tol,
                                       [](double, double y) { return y <= -kHuge; });
    if (!sol.y.empty() && sol.y.back() <= -kHuge) {
        sol.blowup_time = sol.t.back() + 1.0 / std::abs(sol.y.back());
    }
    return sol;
}

struct CriticalCurve {
    std::vector<double> t;
    std::vector<double> y;
    double y0_lo = 0.0, y0_hi = 0.0;  // bisection bracket for y*(0)
    double tol = 0.0;
    double t_max = 0.0;

    double y_star0() const { return 0.5 * (y0_lo + y0_hi); }

    double eval(double ti) const {
        if (t.empty() || ti < t.front() - 1e-9 || ti > t.back() + 1e-9)
            throw RangeError("CriticalCurve::eval: time outside stored grid");
        auto it = std::upper_bound(t.begin(), t.end(), ti);
        std::size_t i = (it == t.begin()) ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
        if (i + 1 >= t.size()) i = t.size() - 2;
        const double s = (ti - t[i]) / (t[i + 1] - t[i]);
        return (1.0 - s) * y[i] + s * y[i + 1];
    }
};

// Forward dichotomy used by the y*(0) bisection: solutions started above the
// critical trajectory cross above -t and track it; solutions started below
// hit the certified-blowup envelope.
inline bool riccati_tracks(double t0, double y0, double t_max, double tol = 1e-10) {
    bool above = false, below = false;
    detail_ode::rk45(
        detail_ode::riccati_rhs, t0, y0, t_max, tol,
        [&](double t, double y) {
            if (y > -t + 0.25) {
                above = true;
                return true;
            }
            if (detail_ode::below_blowup_envelope(t, y)) {
                below = true;
                return true;
            }
            return false;
        });
    if (above) return true;
    if (below) return false;
    // Undecided by t_max: the trajectory is still inside the strip; compare
    // against the strip midline.
    return false;
}

// y*(t) on [0, t_max]: the bracket for y*(0) comes from bisection of the
// track/blowup dichotomy on [-1, 0]; the stored curve is integrated backward
// from the t -> infinity asymptote -(t + 1/(2t) - 3/(8 t^3)), which is the
// stable direction for the separatrix.
inline CriticalCurve critical_curve(double t_max, double tol = 1e-10) {
    if (!(t_max > 0.0)) throw DomainError("critical_curve: t_max must be > 0");
    double lo = -1.0, hi = 0.0;
    if (!riccati_tracks(0.0, hi, std::max(t_max, 10.0), tol) ||
        riccati_tracks(0.0, lo, std::max(t_max, 10.0), tol))
        throw NumericalError("critical_curve: initial bracket invalid");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (riccati_tracks(0.0, mid, std::max(t_max, 10.0), tol))
            hi = mid;
        else
            lo = mid;
    }

    const double t_start = t_max + 8.0;
    const double w = 1.0 / (2.0 * t_start) - 3.0 / (8.0 * t_start * t_start * t_start);
    OdeSolution back = detail_ode::rk45(detail_ode::riccati_rhs, t_start, -(t_start + w), 0.0,
                                        std::min(tol, 1e-11), [](double, double) { return false; });

    CriticalCurve c;
    c.y0_lo = lo;
    c.y0_hi = hi;
    c.tol = tol;
    c.t_max = t_max;
    const int n = 2048;
    c.t.resize(n + 1);
    c.y.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double ti = t_max * i / n;
        c.t[i] = ti;
        c.y[i] = back.eval(ti);
    }
    if (std::abs(c.y.front() - c.y_star0()) > std::max(1e-8, 10.0 * tol))
        throw NumericalError("critical_curve: backward curve disagrees with bisection bracket");
    return c;
}

// Tracking trajectory y+: the solution with |y+(t) + t| -> 0 as t -> -inf.
// Forward integration from -T_big is stable, so the first-order asymptotic
// initialization T_big - 1/(2 T_big) suffices.
inline OdeSolution tracking_solution(double T_big, double t_end, double tol = 1e-10) {
    if (!(T_big >= 10.0)) throw DomainError("tracking_solution: T_big must be >= 10");
    if (!(t_end > -T_big)) throw DomainError("tracking_solution: t_end must exceed -T_big");
    OdeSolution sol = detail_ode::rk45(detail_ode::riccati_rhs, -T_big, T_big - 1.0 / (2.0 * T_big),
                                       t_end, tol, [](double, double) { return false; });
    // The initialization sits 1/(2 T_big) below the line -t; the forward flow
    // pulls it above within O(1/T_big) time, after which y+ >= -t must hold.
    double inf_y = sol.y[0];
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        inf_y = std::min(inf_y, sol.y[i]);
        if (sol.t[i] < 0.0 && sol.y[i] + sol.t[i] < -1.0 / T_big)
            throw NumericalError("tracking_solution: y+ fell below -t for t < 0");
        if (sol.t[i] < 0.0 && sol.t[i] > -T_big + 1.0 && sol.y[i] + sol.t[i] <= 0.0)
            throw NumericalError("tracking_solution: y+ not above -t after the transient");
    }
    if (!(inf_y > 0.0)) throw NumericalError("tracking_solution: inf y+ must be positive");
    return sol;
}

// Macroscopic flow m' = F(m, h(t)) for an arbitrary field.
template <class Field>
OdeSolution flow_ode(const ModelParams& p, Field&& h_of_t, double t0, double m0, double t_end,
                     double tol = 1e-10) {
    if (!(std::abs(m0) < 1.0)) throw DomainError("flow_ode: m0 must be in (-1,1)");
    auto rhs = [&](double t, double m) { return drift_F(p, m, h_of_t(t)); };
    return detail_ode::rk45(rhs, t0, m0, t_end, tol, [](double, double) { return false; });
}

// Flow under the critical-frequency oscillating field h_N(t).
inline OdeSolution macroscopic_flow(const ModelParams& p, long long N, double t0, double m0,
                                    double t_end, double tol = 1e-10) {
    return flow_ode(p, [&](double t) { return oscillating_field(p, N, t); }, t0, m0, t_end, tol);
}

struct EscapeSchedule {
    double t_exit;         // microscopic time of the conditioned exit state
    double m_exit;         // m_c - 2T/(nu N^{1/3})
    double t_prime;        // first t with m*(t) <= m_c - delta
    double t_doubleprime;  // first t with m*(t) <= m_-(h_N(t)) + delta
    double t_tripleprime;  // first t with m*(t) <= m_-(h_N(t)) + N^{-1/2}
};

// First-passage times of the deterministic escape flow started from the
// lower-boundary exit state of the critical window.
inline EscapeSchedule escape_schedule(const ModelParams& p, long long N, double T, double delta,
                                      double tol = 1e-11) {
    if (!(delta > 0.0 && T > 0.0 && N >= 2)) throw DomainError("escape_schedule: bad arguments");
    const double n13 = std::cbrt(static_cast<double>(N));
    EscapeSchedule es{};
    es.t_exit = 0.0;
    es.m_exit = p.m_c - 2.0 * T / (p.nu * n13);

    const double horizon = es.t_exit + 40.0 * n13 / T + 60.0 + 40.0 * std::log(static_cast<double>(N));
    OdeSolution flow = macroscopic_flow(p, N, es.t_exit, es.m_exit, horizon, tol);

    auto m_minus_at = [&](double t) {
        const BranchSet b = branches(p, oscillating_field(p, N, t));
        if (!b.m_minus) throw NumericalError("escape_schedule: lower branch missing");
        return *b.m_minus;
    };
    auto first_passage = [&](double t_from, auto&& level) {
        double prev_t = t_from;
        if (flow.eval(prev_t) - level(prev_t) <= 0.0) return prev_t;
        const double step = 0.05;
        for (double tt = t_from + step; tt <= flow.t_back(); tt += step) {
            if (flow.eval(tt) - level(tt) <= 0.0) {
                double lo = prev_t, hi = tt;
                for (int i = 0; i < 80 && hi - lo > 1e-10 * (1.0 + std::abs(hi)); ++i) {
                    const double mid = 0.5 * (lo + hi);
                    ((flow.eval(mid) - level(mid)) > 0.0 ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            }
            prev_t = tt;
        }
        throw NumericalError("escape_schedule: passage level not reached within horizon");
    };

    es.t_prime = first_passage(es.t_exit, [&](double) { return p.m_c - delta; });
    es.t_doubleprime = first_passage(es.t_prime, [&](double t) { return m_minus_at(t) + delta; });
    const double band = 1.0 / std::sqrt(static_cast<double>(N));
    es.t_tripleprime = first_passage(es.t_doubleprime, [&](double t) { return m_minus_at(t) + band; });
    return es;
}

// Adaptive Simpson quadrature of exp(sign * g * u^2) over [s, t].
namespace detail_ode {
inline double simpson(const std::function<double(double)>& f, double a, double m, double b,
                      double fa, double fm, double fb, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail_ode

inline double integrate_function(const std::function<double(double)>& f, double a, double b,
                                 double rel_tol = 1e-12) {
    if (!(b > a)) throw DomainError("integrate_function: need b > a");
    // pre-split so the adaptive recursion sees the integrand peak
    const int pieces = 64;
    double total = 0.0;
    double scale = 0.0;
    for (int i = 0; i < pieces; ++i) {
        const double x0 = a + (b - a) * i / pieces;
        const double x1 = a + (b - a) * (i + 1) / pieces;
        const double m = 0.5 * (x0 + x1);
        const double fa = f(x0), fm = f(m), fb = f(x1);
        const double whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
        scale = std::max({scale, std::abs(whole)});
        total += detail_ode::simpson(f, x0, m, x1, fa, fm, fb, whole,
                                     std::max(rel_tol * std::max(scale, 1e-300), 1e-300), 48);
    }
    return total;
}

inline double integral_exp_quadratic(double gamma_, double s, double t, int sign) {
    if (!(t > s)) throw DomainError("integral_exp_quadratic: need t > s");
    if (!(gamma_ > 0.0)) throw DomainError("integral_exp_quadratic: gamma must be > 0");
    auto f = [=](double u) { return std::exp(sign * gamma_ * u * u); };
    return integrate_function(f, s, t, 1e-13);
}

}  // namespace cwhyst
