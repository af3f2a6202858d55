#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "cwhyst/errors.hpp"
#include "cwhyst/rng.hpp"

namespace cwhyst::gauss {

// Appendix toolkit: exact grid simulation of linear SDEs, the Marcus-Shepp
// supremum tail bound, small-deviation asymptotics for Gaussian Markov
// processes, and the same-noise pathwise comparison lemma.

struct LinearSdeSpec {
    std::function<double(double)> a;  // drift slope
    std::function<double(double)> b;  // drift offset
    double xi = 1.0;                  // noise amplitude
    double t0 = 0.0, t1 = 1.0;
};

// Per-step exact Gaussian transition X(s1) = phi X(s0) + mean + sd * Z with
// phi = e^{int a}, mean = int b e^{int a}, sd^2 = xi^2 int e^{2 int a};
// the step integrals are evaluated by Simpson quadrature, so discretization
// bias is far below Monte Carlo resolution for smooth coefficients.
struct LinearPropagator {
    std::vector<double> t;     // grid nodes, size n+1
    std::vector<double> phi;   // size n
    std::vector<double> mean;  // size n
    std::vector<double> sd;    // size n
    std::vector<double> sigma;  // marginal std-dev of X started at X(t0)=0, size n+1

    static LinearPropagator build(const LinearSdeSpec& spec, int n_steps) {
        if (n_steps < 2) throw DomainError("LinearPropagator: need at least 2 steps");
        if (!(spec.t1 > spec.t0)) throw DomainError("LinearPropagator: need t1 > t0");
        LinearPropagator pr;
        const double h = (spec.t1 - spec.t0) / n_steps;
        pr.t.resize(static_cast<std::size_t>(n_steps) + 1);
        pr.phi.resize(static_cast<std::size_t>(n_steps));
        pr.mean.resize(static_cast<std::size_t>(n_steps));
        pr.sd.resize(static_cast<std::size_t>(n_steps));
        pr.sigma.assign(static_cast<std::size_t>(n_steps) + 1, 0.0);
        for (int k = 0; k <= n_steps; ++k) pr.t[static_cast<std::size_t>(k)] = spec.t0 + h * k;
        double var = 0.0;
        for (int k = 0; k < n_steps; ++k) {
            const double s0 = pr.t[static_cast<std::size_t>(k)];
            const double sm = s0 + 0.5 * h;
            const double s1 = s0 + h;
            const double a0 = spec.a(s0), am = spec.a(sm), a34 = spec.a(s0 + 0.75 * h),
                         a1 = spec.a(s1);
            const double i_full = h / 6.0 * (a0 + 4.0 * am + a1);
            const double i_half = 0.5 * h / 6.0 * (am + 4.0 * a34 + a1);
            const double e_full = std::exp(i_full), e_half = std::exp(i_half);
            const double b0 = spec.b(s0), bm = spec.b(sm), b1 = spec.b(s1);
            pr.phi[static_cast<std::size_t>(k)] = e_full;
            pr.mean[static_cast<std::size_t>(k)] = h / 6.0 * (b0 * e_full + 4.0 * bm * e_half + b1);
            const double v = spec.xi * spec.xi * h / 6.0 *
                             (e_full * e_full + 4.0 * e_half * e_half + 1.0);
            pr.sd[static_cast<std::size_t>(k)] = std::sqrt(v);
            var = e_full * e_full * var + v;
            pr.sigma[static_cast<std::size_t>(k) + 1] = std::sqrt(var);
        }
        return pr;
    }
};

// Runs `replicas` exact sample paths from X(t0) = x0; visit(r, k, x) is called
// on every node of every path (k = 0 corresponds to t0).
template <class Visitor>
void simulate_linear_paths(const LinearPropagator& pr, double x0, long long replicas,
                           std::uint64_t seed, Visitor&& visit) {
    const std::size_t n = pr.phi.size();
    for (long long r = 0; r < replicas; ++r) {
        rng::Stream stream(seed, static_cast<std::uint64_t>(r));
        double x = x0;
        visit(r, std::size_t{0}, x);
        for (std::size_t k = 0; k < n; ++k) {
            x = pr.phi[k] * x + pr.mean[k] + pr.sd[k] * stream.normal();
            visit(r, k + 1, x);
        }
    }
}

struct SupTailReport {
    double empirical = 0.0;
    double std_error = 0.0;
    double bound = 0.0;
    bool pass = false;
    long long exceed_count = 0;
    long long replicas = 0;
};

// Monte Carlo check of P{ sup_{t in I} |X(t)|/sigma(t) >= lambda } <=
// 2 e^{-lambda^2 (1-delta)/2} for the centered process of `spec` started at 0.
// The supremum window I = [sup_from, t1] defaults to the full interval; the
// bound needs lambda large relative to the window's mixing length, so short
// windows are the regime where a Monte Carlo check is conclusive.
inline SupTailReport gaussian_sup_tail(const LinearSdeSpec& spec, double lambda, double delta,
                                       long long replicas, std::uint64_t seed, int n_grid = 1000,
                                       double sup_from = -std::numeric_limits<double>::infinity()) {
    if (!(lambda >= 0.0) || !(delta >= 0.0 && delta < 1.0))
        throw DomainError("gaussian_sup_tail: bad lambda/delta");
    const LinearPropagator pr = LinearPropagator::build(spec, n_grid);
    long long exceed = 0;
    bool current = false;
    simulate_linear_paths(pr, 0.0, replicas, seed, [&](long long, std::size_t k, double x) {
        if (k == 0) {
            current = false;
            return;
        }
        if (!current && pr.t[k] >= sup_from && pr.sigma[k] > 1e-12 &&
            std::abs(x) / pr.sigma[k] >= lambda)
            current = true;
        if (current && k == pr.sigma.size() - 1) ++exceed;
    });
    // count paths flagged at any node
    SupTailReport rep;
    rep.exceed_count = exceed;
    rep.replicas = replicas;
    rep.empirical = static_cast<double>(exceed) / static_cast<double>(replicas);
    rep.std_error = std::sqrt(rep.empirical * (1.0 - rep.empirical) / static_cast<double>(replicas));
    rep.bound = 2.0 * std::exp(-0.5 * lambda * lambda * (1.0 - delta));
    rep.pass = rep.empirical <= rep.bound + 3.0 * rep.std_error;
    return rep;
}

struct SmallDeviationReport {
    std::vector<double> epsilons;
    std::vector<double> probabilities;     // empirical survival P(sup |X| < eps)
    std::vector<double> eps2_log_p;        // eps^2 ln P for usable entries
    double fitted_constant = 0.0;          // extrapolated value of eps^2 ln P at eps = 0
    double analytic_constant = 0.0;        // -(pi^2/8) (1 - e^{-int a})
    double relative_deviation = 0.0;       // |fitted - analytic| / |analytic|
    // -(pi^2/8) int (G'H - H'G) dt from the covariance factorization of the
    // Gaussian Markov process. For X = int e^{-int a} dw the integrand is the
    // local quadratic-variation rate, identically 1, so this equals
    // -(pi^2/8)(t1 - t0) whatever a is.
    double markov_clock_constant = 0.0;
    double markov_relative_deviation = 0.0;
};

// Small-deviation rate for X(t) = int_{t0}^t e^{-int_u^t a} dw, estimated on a
// decreasing epsilon grid and extrapolated linearly in epsilon.
inline SmallDeviationReport small_deviation_rate(const std::function<double(double)>& a, double t0,
                                                 double t1, std::vector<double> epsilons,
                                                 long long replicas, std::uint64_t seed,
                                                 int n_grid = 4000) {
    if (epsilons.size() < 3) throw DomainError("small_deviation_rate: need >= 3 epsilons");
    std::sort(epsilons.begin(), epsilons.end(), std::greater<double>());

    // int_{t0}^{t1} a by Simpson; a degenerate clock is rejected up front
    double ia = 0.0;
    {
        const double h = (t1 - t0) / n_grid;
        for (int k = 0; k < n_grid; ++k) {
            const double s0 = t0 + h * k;
            ia += h / 6.0 * (a(s0) + 4.0 * a(s0 + 0.5 * h) + a(s0 + h));
        }
    }
    if (ia <= 1e-12)
        throw DomainError("small_deviation_rate: int a must be positive (rate degenerates)");

    LinearSdeSpec spec;
    spec.a = [a](double t) { return -a(t); };  // dX = -a X dt + dw
    spec.b = [](double) { return 0.0; };
    spec.xi = 1.0;
    spec.t0 = t0;
    spec.t1 = t1;
    const LinearPropagator pr = LinearPropagator::build(spec, n_grid);

    std::vector<long long> survived(epsilons.size(), 0);
    double running_max = 0.0;
    simulate_linear_paths(pr, 0.0, replicas, seed, [&](long long, std::size_t k, double x) {
        if (k == 0) {
            running_max = 0.0;
            return;
        }
        running_max = std::max(running_max, std::abs(x));
        if (k == pr.sigma.size() - 1) {
            for (std::size_t i = 0; i < epsilons.size(); ++i)
                if (running_max < epsilons[i]) ++survived[i];
        }
    });

    SmallDeviationReport rep;
    rep.epsilons = epsilons;
    rep.probabilities.resize(epsilons.size());
    for (std::size_t i = 0; i < epsilons.size(); ++i)
        rep.probabilities[i] = static_cast<double>(survived[i]) / static_cast<double>(replicas);
    if (survived.back() == 0)
        throw StatisticalError("small_deviation_rate: no survivors at the smallest epsilon");

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (survived[i] == 0) continue;
        xs.push_back(epsilons[i]);
        ys.push_back(epsilons[i] * epsilons[i] * std::log(rep.probabilities[i]));
    }
    rep.eps2_log_p = ys;
    // linear fit over the three smallest usable epsilons, extrapolated to 0
    const std::size_t m = xs.size();
    const std::size_t use = std::min<std::size_t>(3, m);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = m - use; i < m; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double nn = static_cast<double>(use);
    const double slope = (nn * sxy - sx * sy) / std::max(nn * sxx - sx * sx, 1e-300);
    rep.fitted_constant = (sy - slope * sx) / nn;

    const double pi = 3.14159265358979323846;
    rep.analytic_constant = -(pi * pi / 8.0) * (1.0 - std::exp(-ia));
    rep.relative_deviation =
        std::abs(rep.fitted_constant - rep.analytic_constant) / std::abs(rep.analytic_constant);
    rep.markov_clock_constant = -(pi * pi / 8.0) * (t1 - t0);
    rep.markov_relative_deviation = std::abs(rep.fitted_constant - rep.markov_clock_constant) /
                                    std::abs(rep.markov_clock_constant);
    return rep;
}

struct ComparisonReport {
    bool sign_agreement = true;
    double first_violation_t = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> t;
    std::vector<double> x_linear;
    std::vector<double> x_nonlinear;
    std::vector<double> delta_drift;  // c(X_t,t) - [a(t) X_t + b(t)] along the linear path
};

// Pathwise comparison with shared noise: while the drift discrepancy
// delta_t = c(X_t,t) - [a(t)X_t + b(t)] keeps its sign (and the paths start
// together or already agree), sign(x_t - X_t) = sign(delta_t). Both paths are
// stepped with Euler-Maruyama on the same grid and the same increments.
inline ComparisonReport compare_paths(const LinearSdeSpec& lin,
                                      const std::function<double(double, double)>& c,
                                      std::uint64_t seed, double x0_linear, double x0_nonlinear,
                                      int n_grid = 4000) {
    ComparisonReport rep;
    const double h = (lin.t1 - lin.t0) / n_grid;
    rng::Stream stream(seed, 0);
    double X = x0_linear, x = x0_nonlinear;
    double t = lin.t0;
    bool delta_sign_fixed = true;
    int delta_sign = 0;
    const double floor_tol = 64.0 * std::numeric_limits<double>::epsilon();

    rep.t.push_back(t);
    rep.x_linear.push_back(X);
    rep.x_nonlinear.push_back(x);
    rep.delta_drift.push_back(c(X, t) - (lin.a(t) * X + lin.b(t)));

    for (int k = 0; k < n_grid; ++k) {
        const double dW = std::sqrt(h) * stream.normal();
        const double delta = c(X, t) - (lin.a(t) * X + lin.b(t));
        X += h * (lin.a(t) * X + lin.b(t)) + lin.xi * dW;
        x += h * c(x, t) + lin.xi * dW;
        t = lin.t0 + h * (k + 1);

        if (delta_sign == 0 && delta != 0.0) delta_sign = (delta > 0.0) ? 1 : -1;
        if (delta_sign != 0 && delta * delta_sign < 0.0) delta_sign_fixed = false;

        rep.t.push_back(t);
        rep.x_linear.push_back(X);
        rep.x_nonlinear.push_back(x);
        rep.delta_drift.push_back(c(X, t) - (lin.a(t) * X + lin.b(t)));

        if (!delta_sign_fixed) break;  // comparison window ends at the first delta zero
        const double diff = x - X;
        if (std::abs(diff) > floor_tol * (1.0 + std::abs(x) + std::abs(X)) && delta_sign != 0 &&
            diff * delta_sign < 0.0) {
            rep.sign_agreement = false;
            rep.first_violation_t = t;
            break;
        }
    }
    return rep;
}

}  // namespace cwhyst::gauss
